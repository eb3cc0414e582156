//! Population augmentation graphs.
//!
//! An edge weight `w_ij` is the probability that augmented points `i` and `j`
//! are both generated from one natural datum drawn from `P`. Graphs come either
//! from an explicit discrete augmentation model or from a synthetic generator
//! that realizes chosen compactness (`delta`) and distinguishability (`xi`)
//! constants.

use nalgebra::{DMatrix, DVector};

use crate::embedding::{normalize, NormalizedAdjacency};
use crate::error::{Error, Result};
use crate::rng::{streams, SeededStream};
use crate::structure::SubclassStructure;

/// Relative tolerance for treating a weight as zero.
pub const ZERO_TOL: f64 = 1e-12;

/// Tolerance for probability vectors summing to one.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// `P` over natural points and `A(x | x*)` as a row-stochastic matrix
/// (natural points × augmented points).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteAugmentationModel {
    natural_probs: DVector<f64>,
    aug_probs: DMatrix<f64>,
}

impl DiscreteAugmentationModel {
    pub fn new(natural_probs: DVector<f64>, aug_probs: DMatrix<f64>) -> Result<Self> {
        if natural_probs.len() != aug_probs.nrows() {
            return Err(Error::DimensionMismatch {
                what: "natural_probs length vs aug_probs rows",
                expected: aug_probs.nrows(),
                got: natural_probs.len(),
            });
        }
        if natural_probs.iter().chain(aug_probs.iter()).any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let total = natural_probs.sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "natural_probs sums to {total}, expected 1"
            )));
        }
        for (r, row) in aug_probs.row_iter().enumerate() {
            let s = row.sum();
            if (s - 1.0).abs() > PROB_SUM_TOL {
                return Err(Error::InvalidArgument(format!(
                    "aug_probs row {r} sums to {s}, expected 1"
                )));
            }
        }
        Ok(Self {
            natural_probs,
            aug_probs,
        })
    }

    pub fn natural_probs(&self) -> &DVector<f64> {
        &self.natural_probs
    }

    pub fn aug_probs(&self) -> &DMatrix<f64> {
        &self.aug_probs
    }

    pub fn natural_count(&self) -> usize {
        self.aug_probs.nrows()
    }

    pub fn augmented_count(&self) -> usize {
        self.aug_probs.ncols()
    }
}

/// Dense symmetric nonnegative edge weights over the augmented points.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    weights: DMatrix<f64>,
    structure: SubclassStructure,
}

impl AdjacencyMatrix {
    pub fn new(weights: DMatrix<f64>, structure: SubclassStructure) -> Result<Self> {
        let n = structure.n();
        if weights.nrows() != n || weights.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "adjacency size vs structure point count",
                expected: n,
                got: weights.nrows().max(weights.ncols()),
            });
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::InvalidArgument(
                "adjacency weights must be finite and nonnegative".into(),
            ));
        }
        let scale = max_abs(&weights).max(f64::MIN_POSITIVE);
        let asym = max_asymmetry(&weights);
        if asym > ZERO_TOL * scale {
            return Err(Error::NotSymmetric(asym));
        }
        for (i, row) in weights.row_iter().enumerate() {
            if row.sum() <= ZERO_TOL * scale {
                return Err(Error::IsolatedVertex(i));
            }
        }
        Ok(Self { weights, structure })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn structure(&self) -> &SubclassStructure {
        &self.structure
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn into_parts(self) -> (DMatrix<f64>, SubclassStructure) {
        (self.weights, self.structure)
    }

    /// Copy with every cross-sub-class weight set to zero.
    pub fn block_part(&self) -> DMatrix<f64> {
        block_mask(&self.weights, &self.structure)
    }

    fn zero_threshold(&self) -> f64 {
        ZERO_TOL * max_abs(&self.weights)
    }
}

/// Measured assumption constants of a graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionReport {
    pub delta: f64,
    pub delta_prime: f64,
    pub xi: f64,
}

impl AssumptionReport {
    pub fn measure(adj: &AdjacencyMatrix) -> Result<Self> {
        let delta = measure_delta(adj);
        Ok(Self {
            delta,
            delta_prime: delta_prime(delta),
            xi: measure_xi(adj)?,
        })
    }
}

/// Column-ratio slack of the normalized blocks implied by a weight-ratio
/// slack `delta`: `(1 + delta)^{3/2} - 1`.
pub fn delta_prime(delta: f64) -> f64 {
    (1.0 + delta).powf(1.5) - 1.0
}

/// `w_ij = sum_x* P(x*) A(x_i|x*) A(x_j|x*)`, i.e. `A^T diag(P) A`.
pub fn build_from_discrete_model(
    model: &DiscreteAugmentationModel,
    structure: &SubclassStructure,
) -> Result<AdjacencyMatrix> {
    if model.augmented_count() != structure.n() {
        return Err(Error::DimensionMismatch {
            what: "augmented point count vs structure",
            expected: structure.n(),
            got: model.augmented_count(),
        });
    }
    AdjacencyMatrix::new(cooccurrence_weights(model), structure.clone())
}

/// The raw weight matrix of a model, before any structural validation.
pub fn cooccurrence_weights(model: &DiscreteAugmentationModel) -> DMatrix<f64> {
    let mut scaled = model.aug_probs.clone();
    for (mut row, &p) in scaled.row_iter_mut().zip(model.natural_probs.iter()) {
        row *= p;
    }
    let mut weights = model.aug_probs.transpose() * scaled;
    symmetrize_in_place(&mut weights);
    weights
}

/// Generate a graph whose measured `delta` and `xi` do not exceed the targets.
///
/// In-block weights are `base_weight * exp(u * ln(1 + delta) / 2)` with `u`
/// uniform on `[-1, 1)`, so any two entries of one column differ by at most a
/// factor `1 + delta`. Cross-block weights are uniform on
/// `[0, xi * min in-block weight)`. With both targets zero the result is the
/// uniform block matrix.
pub fn synthesize_structured(
    structure: &SubclassStructure,
    delta_target: f64,
    xi_target: f64,
    base_weight: f64,
    seed: u64,
) -> Result<AdjacencyMatrix> {
    for (name, v) in [("delta", delta_target), ("xi", xi_target)] {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!(
                "{name} target {v} is outside [0, 1)"
            )));
        }
    }
    if !(base_weight > 0.0 && base_weight.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "base weight must be positive, got {base_weight}"
        )));
    }
    let n = structure.n();
    let mut rng = SeededStream::new(seed, streams::GRAPH);
    let half_log = (1.0 + delta_target).ln() / 2.0;

    // Exponents u in [-1, 1), one per unordered in-block pair.
    let mut exponents = DMatrix::<f64>::zeros(n, n);
    for block in structure.blocks() {
        for s in block.clone() {
            for t in s..block.end {
                let u = rng.symmetric();
                exponents[(s, t)] = u;
                exponents[(t, s)] = u;
            }
        }
    }

    let mut shrink = 1.0;
    let mut weights;
    loop {
        weights = DMatrix::<f64>::zeros(n, n);
        for block in structure.blocks() {
            for s in block.clone() {
                for t in block.clone() {
                    weights[(s, t)] = base_weight * (exponents[(s, t)] * half_log * shrink).exp();
                }
            }
        }
        let measured = delta_of_blocks(&weights, structure, 0.0);
        if measured <= delta_target {
            break;
        }
        // Rounding pushed a ratio past the target; pull all exponents in.
        shrink *= (1.0 + delta_target).ln() / (1.0 + measured).ln() * (1.0 - 1e-12);
    }

    if xi_target > 0.0 {
        let min_in_block = structure
            .blocks()
            .flat_map(|b| {
                let w = &weights;
                b.clone().flat_map(move |s| b.clone().map(move |t| w[(s, t)]))
            })
            .fold(f64::INFINITY, f64::min);
        let cap = xi_target * min_in_block;
        let subclass = structure.point_subclasses();
        for i in 0..n {
            for j in (i + 1)..n {
                if subclass[i] != subclass[j] {
                    let w = rng.uniform() * cap;
                    weights[(i, j)] = w;
                    weights[(j, i)] = w;
                }
            }
        }
    }

    AdjacencyMatrix::new(weights, structure.clone())
}

/// Smallest `delta` for which every same-sub-class ratio `w_sj / w_tj`
/// (s, t, j in one sub-class, ordered pairs) lies in `[1/(1+delta), 1+delta]`.
///
/// `0/0` counts as ratio 1; a positive weight over a zero weight yields
/// `f64::INFINITY`.
pub fn measure_delta(adj: &AdjacencyMatrix) -> f64 {
    delta_of_blocks(&adj.weights, &adj.structure, adj.zero_threshold())
}

fn delta_of_blocks(weights: &DMatrix<f64>, structure: &SubclassStructure, zero: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for block in structure.blocks() {
        for j in block.clone() {
            let (lo, hi) = block.clone().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| {
                let w = weights[(s, j)];
                (lo.min(w), hi.max(w))
            });
            if hi <= zero {
                continue;
            }
            if lo <= zero {
                return f64::INFINITY;
            }
            worst = worst.max(hi / lo - 1.0);
        }
    }
    worst
}

/// `(max cross-sub-class weight) / (min same-sub-class weight)`.
pub fn measure_xi(adj: &AdjacencyMatrix) -> Result<f64> {
    let subclass = adj.structure.point_subclasses();
    let n = adj.n();
    let mut min_same = f64::INFINITY;
    let mut max_cross: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let w = adj.weights[(i, j)];
            if subclass[i] == subclass[j] {
                min_same = min_same.min(w);
            } else {
                max_cross = max_cross.max(w);
            }
        }
    }
    if min_same <= adj.zero_threshold() {
        return Err(Error::AssumptionInapplicable(
            "a same-sub-class weight is zero, so the cross/within ratio is unbounded".into(),
        ));
    }
    Ok(max_cross / min_same)
}

/// Normalize the block part and the full graph separately.
///
/// Returns `(A_bar, A_tilde, ||A_tilde - A_bar||_F)`, where `A_bar` normalizes
/// the adjacency with cross-sub-class weights zeroed first and `A_tilde`
/// normalizes the full adjacency.
pub fn split_block_and_residual(
    adj: &AdjacencyMatrix,
) -> Result<(NormalizedAdjacency, NormalizedAdjacency, f64)> {
    let block = adj.block_part();
    for (i, row) in block.row_iter().enumerate() {
        if row.sum() <= adj.zero_threshold() {
            return Err(Error::IsolatedVertex(i));
        }
    }
    let block_adj = AdjacencyMatrix {
        weights: block,
        structure: adj.structure.clone(),
    };
    let bar = normalize(&block_adj)?;
    let tilde = normalize(adj)?;
    let pert = (tilde.matrix() - bar.matrix()).norm();
    Ok((bar, tilde, pert))
}

pub(crate) fn block_mask(m: &DMatrix<f64>, structure: &SubclassStructure) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for b in structure.blocks() {
        let len = b.len();
        out.view_mut((b.start, b.start), (len, len))
            .copy_from(&m.view((b.start, b.start), (len, len)));
    }
    out
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()))
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn two_by_four() -> SubclassStructure {
        SubclassStructure::balanced(2, 2, 4).unwrap()
    }

    /// Brute force over ordered same-sub-class triples (s, t, j).
    fn delta_oracle(adj: &AdjacencyMatrix) -> f64 {
        let sub = adj.structure().point_subclasses();
        let w = adj.weights();
        let n = adj.n();
        let mut worst: f64 = 0.0;
        for s in 0..n {
            for t in 0..n {
                for j in 0..n {
                    if sub[s] != sub[t] || sub[t] != sub[j] {
                        continue;
                    }
                    let (a, b) = (w[(s, j)], w[(t, j)]);
                    let r = if a == 0.0 && b == 0.0 {
                        1.0
                    } else if b == 0.0 {
                        f64::INFINITY
                    } else {
                        a / b
                    };
                    worst = worst.max(r - 1.0);
                }
            }
        }
        worst
    }

    fn xi_oracle(adj: &AdjacencyMatrix) -> f64 {
        let sub = adj.structure().point_subclasses();
        let w = adj.weights();
        let mut cross = vec![];
        let mut same = vec![];
        for i in 0..adj.n() {
            for j in 0..adj.n() {
                if sub[i] == sub[j] {
                    same.push(w[(i, j)]);
                } else {
                    cross.push(w[(i, j)]);
                }
            }
        }
        let mx = cross.iter().cloned().fold(0.0, f64::max);
        let mn = same.iter().cloned().fold(f64::INFINITY, f64::min);
        mx / mn
    }

    fn random_stochastic(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = SeededStream::new(seed, 77);
        let mut m = DMatrix::from_fn(rows, cols, |_, _| rng.uniform() + 0.01);
        for mut r in m.row_iter_mut() {
            let s = r.sum();
            r /= s;
        }
        m
    }

    #[test]
    fn single_natural_point_gives_quarters() {
        let model = DiscreteAugmentationModel::new(
            DVector::from_vec(vec![1.0]),
            DMatrix::from_row_slice(1, 2, &[0.5, 0.5]),
        )
        .unwrap();
        let w = cooccurrence_weights(&model);
        assert_eq!(w, DMatrix::from_element(2, 2, 0.25));
    }

    #[test]
    fn never_generated_point_is_isolated() {
        let structure = SubclassStructure::new(2, vec![2, 2], vec![0, 1]).unwrap();
        let model = DiscreteAugmentationModel::new(
            DVector::from_vec(vec![1.0]),
            DMatrix::from_row_slice(1, 4, &[0.5, 0.5, 0.0, 0.0]),
        )
        .unwrap();
        assert!(matches!(
            build_from_discrete_model(&model, &structure),
            Err(Error::IsolatedVertex(2))
        ));
    }

    #[test]
    fn disjoint_supports_are_block_diagonal() {
        let structure = SubclassStructure::new(2, vec![2, 2], vec![0, 1]).unwrap();
        let model = DiscreteAugmentationModel::new(
            DVector::from_vec(vec![0.5, 0.5]),
            DMatrix::from_row_slice(2, 4, &[0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5]),
        )
        .unwrap();
        let adj = build_from_discrete_model(&model, &structure).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i / 2 == j / 2 { 0.125 } else { 0.0 };
                assert_abs_diff_eq!(adj.weights()[(i, j)], expected, epsilon = 1e-15);
            }
        }
        assert_eq!(measure_xi(&adj).unwrap(), 0.0);
    }

    #[test]
    fn random_model_matches_triple_sum() {
        let structure = SubclassStructure::new(2, vec![3, 3], vec![0, 1]).unwrap();
        let aug = random_stochastic(3, 6, 11);
        let probs = DVector::from_vec(vec![0.2, 0.3, 0.5]);
        let model = DiscreteAugmentationModel::new(probs.clone(), aug.clone()).unwrap();
        let adj = build_from_discrete_model(&model, &structure).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let mut acc = 0.0;
                for x in 0..3 {
                    acc += probs[x] * aug[(x, i)] * aug[(x, j)];
                }
                assert_abs_diff_eq!(adj.weights()[(i, j)], acc, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn model_dimension_mismatch() {
        let structure = two_by_four();
        let model = DiscreteAugmentationModel::new(
            DVector::from_vec(vec![1.0]),
            DMatrix::from_row_slice(1, 2, &[0.5, 0.5]),
        )
        .unwrap();
        assert!(matches!(
            build_from_discrete_model(&model, &structure),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn model_rejects_bad_probabilities() {
        assert!(DiscreteAugmentationModel::new(
            DVector::from_vec(vec![0.5, 0.4]),
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
        )
        .is_err());
        assert!(DiscreteAugmentationModel::new(
            DVector::from_vec(vec![1.0]),
            DMatrix::from_row_slice(1, 2, &[0.7, 0.7]),
        )
        .is_err());
    }

    #[test]
    fn zero_targets_give_uniform_blocks() {
        let adj = synthesize_structured(&two_by_four(), 0.0, 0.0, 1.0, 3).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let expected = if i / 4 == j / 4 { 1.0 } else { 0.0 };
                assert_eq!(adj.weights()[(i, j)], expected);
            }
        }
        assert_eq!(measure_delta(&adj), 0.0);
        assert_eq!(measure_xi(&adj).unwrap(), 0.0);
    }

    #[test]
    fn delta_target_is_respected_and_realized() {
        let adj = synthesize_structured(&two_by_four(), 0.1, 0.0, 1.0, 3).unwrap();
        let d = measure_delta(&adj);
        assert!(d > 0.0 && d <= 0.1, "delta {d}");
        assert_abs_diff_eq!(d, delta_oracle(&adj), epsilon = 1e-15);
    }

    #[test]
    fn xi_target_caps_off_block() {
        let adj = synthesize_structured(&two_by_four(), 0.0, 0.05, 1.0, 3).unwrap();
        let w = adj.weights();
        let min_in = 1.0;
        for i in 0..8 {
            for j in 0..8 {
                if i / 4 != j / 4 {
                    assert!(w[(i, j)] <= 0.05 * min_in);
                }
            }
        }
        let xi = measure_xi(&adj).unwrap();
        assert!(xi > 0.0 && xi <= 0.05);
    }

    #[test]
    fn synthesize_rejects_targets_outside_unit_interval() {
        assert!(synthesize_structured(&two_by_four(), 1.0, 0.0, 1.0, 0).is_err());
        assert!(synthesize_structured(&two_by_four(), 0.0, -0.1, 1.0, 0).is_err());
        assert!(synthesize_structured(&two_by_four(), 0.0, 0.0, 0.0, 0).is_err());
    }

    #[test]
    fn scaled_pair_gives_point_two() {
        let mut w = DMatrix::zeros(8, 8);
        for i in 0..8 {
            for j in 0..8 {
                if i / 4 == j / 4 {
                    w[(i, j)] = 1.0;
                }
            }
        }
        w[(0, 1)] = 1.2;
        w[(1, 0)] = 1.2;
        let adj = AdjacencyMatrix::new(w, two_by_four()).unwrap();
        assert_abs_diff_eq!(measure_delta(&adj), 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(measure_delta(&adj), delta_oracle(&adj), epsilon = 1e-15);
    }

    #[test]
    fn random_blocks_match_triple_loop() {
        let mut rng = SeededStream::new(5, 0);
        let structure = SubclassStructure::new(2, vec![3, 4, 2], vec![0, 1, 0]).unwrap();
        let mut w = DMatrix::zeros(9, 9);
        for b in structure.blocks() {
            for s in b.clone() {
                for t in s..b.end {
                    let v = rng.range(0.5, 2.0);
                    w[(s, t)] = v;
                    w[(t, s)] = v;
                }
            }
        }
        let adj = AdjacencyMatrix::new(w, structure).unwrap();
        assert_abs_diff_eq!(measure_delta(&adj), delta_oracle(&adj), epsilon = 1e-14);
    }

    #[test]
    fn positive_over_zero_is_infinite() {
        let mut w = DMatrix::from_element(4, 4, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                w[(i, j)] = 1.0;
                w[(i + 2, j + 2)] = 1.0;
            }
        }
        w[(0, 1)] = 0.0;
        w[(1, 0)] = 0.0;
        let adj = AdjacencyMatrix::new(w, SubclassStructure::balanced(2, 2, 2).unwrap()).unwrap();
        assert_eq!(measure_delta(&adj), f64::INFINITY);
        assert!(matches!(
            measure_xi(&adj),
            Err(Error::AssumptionInapplicable(_))
        ));
    }

    #[test]
    fn uniform_off_block_ratio() {
        let mut w = DMatrix::from_element(8, 8, 0.03);
        for i in 0..8 {
            for j in 0..8 {
                if i / 4 == j / 4 {
                    w[(i, j)] = 1.0;
                }
            }
        }
        let adj = AdjacencyMatrix::new(w, two_by_four()).unwrap();
        assert_abs_diff_eq!(measure_xi(&adj).unwrap(), 0.03, epsilon = 1e-15);
    }

    #[test]
    fn random_matrix_xi_matches_scan() {
        let mut rng = SeededStream::new(8, 0);
        let mut w = DMatrix::zeros(8, 8);
        for i in 0..8 {
            for j in i..8 {
                let v = rng.range(0.1, 1.0);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
        let adj = AdjacencyMatrix::new(w, two_by_four()).unwrap();
        assert_abs_diff_eq!(measure_xi(&adj).unwrap(), xi_oracle(&adj), epsilon = 1e-15);
    }

    #[test]
    fn adjacency_validation() {
        let s = SubclassStructure::balanced(2, 2, 2).unwrap();
        let mut w = DMatrix::from_element(4, 4, 1.0);
        w[(0, 1)] = 2.0;
        assert!(matches!(
            AdjacencyMatrix::new(w, s.clone()),
            Err(Error::NotSymmetric(_))
        ));
        let mut w = DMatrix::from_element(4, 4, 1.0);
        for j in 0..4 {
            w[(3, j)] = 0.0;
            w[(j, 3)] = 0.0;
        }
        assert!(matches!(
            AdjacencyMatrix::new(w, s.clone()),
            Err(Error::IsolatedVertex(3))
        ));
        let w = DMatrix::from_element(4, 4, -1.0);
        assert!(AdjacencyMatrix::new(w, s).is_err());
    }

    #[test]
    fn split_of_block_diagonal_has_no_residual() {
        let adj = synthesize_structured(&two_by_four(), 0.1, 0.0, 2.0, 1).unwrap();
        let (bar, tilde, pert) = split_block_and_residual(&adj).unwrap();
        assert_eq!(pert, 0.0);
        assert_eq!(bar.matrix(), tilde.matrix());
    }

    #[test]
    fn residual_shrinks_with_xi() {
        let s = SubclassStructure::balanced(2, 3, 5).unwrap();
        let perts: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&xi| {
                let adj = synthesize_structured(&s, 0.0, xi, 1.0, 9).unwrap();
                split_block_and_residual(&adj).unwrap().2
            })
            .collect();
        assert!(perts[0] > perts[1] && perts[1] > perts[2] && perts[2] > 0.0, "{perts:?}");
    }

    #[test]
    fn delta_prime_formula() {
        assert_eq!(delta_prime(0.0), 0.0);
        assert_abs_diff_eq!(delta_prime(0.1), 1.1f64.powf(1.5) - 1.0, epsilon = 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(120))]

        #[test]
        fn synthesized_graphs_meet_targets(
            k_bar in 2usize..5,
            size in 2usize..7,
            delta in 0.0f64..0.99,
            xi in 0.0f64..0.99,
            base in 0.01f64..10.0,
            seed in any::<u64>(),
        ) {
            let s = SubclassStructure::balanced(2, k_bar, size).unwrap();
            let adj = synthesize_structured(&s, delta, xi, base, seed).unwrap();
            prop_assert!(measure_delta(&adj) <= delta);
            prop_assert!(measure_xi(&adj).unwrap() <= xi);
            let again = synthesize_structured(&s, delta, xi, base, seed).unwrap();
            prop_assert_eq!(adj.weights(), again.weights());
            let (_, _, pert) = split_block_and_residual(&adj).unwrap();
            prop_assert_eq!(pert == 0.0, measure_xi(&adj).unwrap() == 0.0);
        }

        #[test]
        fn discrete_models_are_symmetric_nonnegative(seed in any::<u64>(), m in 1usize..5) {
            let s = SubclassStructure::balanced(2, 2, 3).unwrap();
            let aug = random_stochastic(m, 6, seed);
            let probs = DVector::from_element(m, 1.0 / m as f64);
            let model = DiscreteAugmentationModel::new(probs, aug).unwrap();
            let adj = build_from_discrete_model(&model, &s).unwrap();
            let w = adj.weights();
            prop_assert!(w.iter().all(|&x| x >= 0.0));
            prop_assert_eq!(w.clone(), w.transpose());
        }
    }
}
