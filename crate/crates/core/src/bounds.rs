//! Explicit spectral bounds evaluated as checkable predicates.
//!
//! Every evaluator is pure and reports through [`BoundReport`]. Quantities
//! that only have asymptotic guarantees are exposed as trend measurements
//! (fitted exponents, ratios) instead of pass/fail inequalities.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::embedding::{eigendecompose, normalize, verify_column_ratio, Spectrum};
use crate::error::{Error, Result};
use crate::graph::{split_block_and_residual, synthesize_structured, AdjacencyMatrix};
use crate::labels::{clean_labels, LabelMatrix};
use crate::linalg::{ols_slope, sym_operator_norm};
use crate::probe::expected_error_closed_form;
use crate::structure::SubclassStructure;

/// Slack below which a bound is reported as violated.
pub const HOLD_TOL: f64 = 1e-9;

/// Which side of the bound the observed value must sit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// `observed <= bound`
    Upper,
    /// `observed >= bound`
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub bound_value: f64,
    pub observed_value: f64,
    pub holds: bool,
    /// Distance to the bound, positive on the satisfied side.
    pub slack: f64,
    pub orientation: Orientation,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, bound: f64, observed: f64, orientation: Orientation) -> Self {
        let slack = match orientation {
            Orientation::Upper => bound - observed,
            Orientation::Lower => observed - bound,
        };
        Self {
            name: name.into(),
            bound_value: bound,
            observed_value: observed,
            holds: slack >= -HOLD_TOL,
            slack,
            orientation,
        }
    }

    pub fn upper(name: impl Into<String>, bound: f64, observed: f64) -> Self {
        Self::new(name, bound, observed, Orientation::Upper)
    }

    pub fn lower(name: impl Into<String>, bound: f64, observed: f64) -> Self {
        Self::new(name, bound, observed, Orientation::Lower)
    }
}

/// Inputs of the flip-noise tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToleranceInputs {
    pub classes: usize,
    pub subclasses: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub c_max: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub beta: f64,
    pub p: usize,
}

impl ToleranceInputs {
    pub fn from_structure(
        structure: &SubclassStructure,
        c_max: f64,
        delta: f64,
        beta: f64,
        p: usize,
    ) -> Self {
        Self {
            classes: structure.classes(),
            subclasses: structure.subclasses(),
            n_min: structure.n_min(),
            n_max: structure.n_max(),
            c_max,
            delta,
            delta_prime: crate::graph::delta_prime(delta),
            beta,
            p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 || self.subclasses < self.classes {
            return Err(Error::InvalidArgument(format!(
                "need 2 <= K <= K_bar, got K={} K_bar={}",
                self.classes, self.subclasses
            )));
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::InvalidArgument(format!(
                "sub-class sizes out of order: n_min={} n_max={}",
                self.n_min, self.n_max
            )));
        }
        let lo = 1.0 / (self.classes - 1) as f64;
        if !(self.c_max >= lo - 1e-12 && self.c_max <= 1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "c_max {} is outside [{lo}, 1]",
                self.c_max
            )));
        }
        if !(self.delta_prime >= 0.0) || !(self.beta >= 0.0) {
            return Err(Error::InvalidArgument(
                "delta_prime and beta must be nonnegative".into(),
            ));
        }
        if self.p < self.subclasses {
            return Err(Error::RankTooSmall {
                p: self.p,
                k_bar: self.subclasses,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerance {
    /// Largest flip rate with a clean-recovery guarantee (0 when none).
    pub alpha_max: f64,
    /// Lower bound on the smallest Perron-vector entry.
    pub e_min: f64,
    /// Upper bound on the largest Perron-vector entry.
    pub e_max: f64,
    /// Upper bound on `e_max / e_min`.
    pub ratio_bound: f64,
    /// Numerator before the guarantee check; nonpositive means no guarantee.
    pub numerator: f64,
    /// False when `delta` is too large for any guarantee.
    pub guaranteed: bool,
}

/// `n^2 / (1 + (n - 1)(1 + delta')^2)`, a lower bound on the squared l1 norm
/// of a block's Perron vector.
pub fn perron_l1_lower_bound(n_k: usize, delta_prime: f64) -> f64 {
    let n = n_k as f64;
    n * n / (1.0 + (n - 1.0) * (1.0 + delta_prime).powi(2))
}

/// Upper bound on the sum of squared eigenvalues of one normalized block.
pub fn squared_eigenvalue_bound(n_k: usize, delta_prime: f64) -> f64 {
    let n = n_k as f64;
    let a = (1.0 + delta_prime).powi(2);
    (1.0 + (n - 1.0) * a) * a / n
}

/// Bounds on a single non-leading eigenvalue of a block and on the sum of
/// its next `p_k - 1` eigenvalues. Negative radicands from rounding clamp to 0.
pub fn eigenvalue_tail_bounds(n_k: usize, delta_prime: f64, p_k: usize) -> Result<(f64, f64)> {
    if p_k > n_k {
        return Err(Error::InvalidArgument(format!(
            "p_k={p_k} exceeds block size {n_k}"
        )));
    }
    let tail_sq = (squared_eigenvalue_bound(n_k, delta_prime) - 1.0).max(0.0);
    let per_eig = tail_sq.sqrt();
    let sum = (p_k.saturating_sub(1) as f64).sqrt() * per_eig;
    Ok((per_eig, sum))
}

/// Bias and variance bounds for the ridge probe on a block-diagonal
/// spectrum with column-ratio slack `delta_prime`.
pub fn error_bound_values(
    structure: &SubclassStructure,
    p: usize,
    beta: f64,
    sigma: f64,
    delta_prime: f64,
) -> Result<(f64, f64)> {
    let k_bar = structure.subclasses();
    if p < k_bar {
        return Err(Error::RankTooSmall { p, k_bar });
    }
    if !(beta >= 0.0) || !(sigma >= 0.0) || !(delta_prime >= 0.0) {
        return Err(Error::InvalidArgument(
            "beta, sigma and delta_prime must be nonnegative".into(),
        ));
    }
    let n = structure.n() as f64;
    let shrink = 1.0 / (1.0 + beta);
    let perron_mass: f64 = structure
        .sizes()
        .iter()
        .map(|&s| perron_l1_lower_bound(s, delta_prime))
        .sum();
    let bias = 1.0 - (2.0 * shrink - shrink * shrink) * perron_mass / n;

    let tail = (p - k_bar) as f64;
    let tail_sq_total: f64 = structure
        .sizes()
        .iter()
        .map(|&s| (squared_eigenvalue_bound(s, delta_prime) - 1.0).max(0.0))
        .sum();
    let tail_sum = tail.sqrt() * tail_sq_total.sqrt();
    let s2n = sigma * sigma / n;
    let denom = tail_sum + tail * beta;
    // With no tail mass the shrinkage sum vanishes for any beta > 0, and also
    // in the beta -> 0 limit.
    let tail_term = if denom > 0.0 {
        tail - beta * tail * tail / denom
    } else {
        0.0
    };
    let variance = s2n * k_bar as f64 * shrink * shrink + s2n * tail_term;
    Ok((bias, variance))
}

/// Coefficient of the first-order `delta` term in the bias expansion:
/// `3 (1 - K_bar/n)(2 beta + 1) / (beta + 1)^2`.
pub fn bias_delta_coefficient(n: usize, k_bar: usize, beta: f64) -> f64 {
    3.0 * (1.0 - k_bar as f64 / n as f64) * (2.0 * beta + 1.0) / (beta + 1.0).powi(2)
}

/// Compares the exact expected bias and variance of the probe on `spec` with
/// their bounds. Requires a block-diagonal spectrum.
pub fn error_bounds(
    spec: &Spectrum,
    p: usize,
    beta: f64,
    sigma: f64,
    delta_prime: f64,
) -> Result<(BoundReport, BoundReport)> {
    if spec.block_support().is_none() {
        return Err(Error::NotBlockDiagonal);
    }
    let structure = spec.structure();
    let (bias_bound, var_bound) = error_bound_values(structure, p, beta, sigma, delta_prime)?;
    let y = clean_labels(structure);
    let exact = expected_error_closed_form(spec, p, &y, beta, sigma)?;
    Ok((
        BoundReport::upper("bias", bias_bound, exact.bias_sq),
        BoundReport::upper("variance", var_bound, exact.variance),
    ))
}

/// Lower bound on the smallest Perron entry, upper bound on the largest and
/// on their ratio.
pub fn perron_entry_bounds(n_min: usize, n_max: usize, delta_prime: f64) -> (f64, f64, f64) {
    let a = (1.0 + delta_prime).powi(2);
    let nmax = n_max as f64;
    let nmin = n_min as f64;
    let e_min = (1.0 / (1.0 + (nmax - 1.0) * a)).sqrt();
    let e_max = (1.0 / (1.0 + (nmin - 1.0) / a)).sqrt();
    let ratio = (1.0 + delta_prime) * ((1.0 + a * (nmax - 1.0)) / (nmax - 1.0 + a)).sqrt();
    (e_min, e_max, ratio)
}

/// Largest flip rate for which the probe provably recovers every clean label,
/// using the worst-case Perron entry `e_min` in the noise term.
pub fn flip_tolerance_exact(inputs: &ToleranceInputs) -> Result<Tolerance> {
    inputs.validate()?;
    let (e_min, e_max, ratio_bound) =
        perron_entry_bounds(inputs.n_min, inputs.n_max, inputs.delta_prime);
    let n_max = inputs.n_max as f64;
    let n_min = inputs.n_min as f64;
    let correction = if inputs.delta_prime == 0.0 {
        0.0
    } else {
        let keep = inputs.beta / (inputs.beta + 1.0);
        2.0 * n_max.sqrt()
            * (1.0 + inputs.c_max.sqrt())
            * ((inputs.p - 1) as f64).sqrt()
            * inputs.delta_prime.sqrt()
            / (keep * e_min * e_min * n_min)
    };
    let numerator = 1.0 - correction;
    let denominator = 1.0 + n_max / n_min * ratio_bound * inputs.c_max;
    let guaranteed = numerator > 0.0;
    if !guaranteed {
        log::debug!(
            "delta={} too large for a flip-noise guarantee (numerator {numerator})",
            inputs.delta
        );
    }
    Ok(Tolerance {
        alpha_max: if guaranteed { numerator / denominator } else { 0.0 },
        e_min,
        e_max,
        ratio_bound,
        numerator,
        guaranteed,
    })
}

/// `max_i |lambda~_i - lambda_i| <= ||E||_2`.
pub fn weyl_check(clean: &Spectrum, perturbed: &Spectrum, e_operator_norm: f64) -> Result<BoundReport> {
    if clean.n() != perturbed.n() {
        return Err(Error::DimensionMismatch {
            what: "perturbed spectrum size",
            expected: clean.n(),
            got: perturbed.n(),
        });
    }
    let observed = clean
        .eigenvalues()
        .iter()
        .zip(perturbed.eigenvalues().iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(BoundReport::upper("weyl", e_operator_norm, observed))
}

/// `||V_I V_I^T Y||_F^2` for the top `top_count` eigenvectors.
pub fn projection_alignment(spec: &Spectrum, top_count: usize, y: &LabelMatrix) -> Result<f64> {
    if top_count > spec.n() {
        return Err(Error::InvalidArgument(format!(
            "top_count {top_count} exceeds n={}",
            spec.n()
        )));
    }
    if y.n() != spec.n() {
        return Err(Error::DimensionMismatch {
            what: "label rows vs spectrum size",
            expected: spec.n(),
            got: y.n(),
        });
    }
    Ok(spec.top_projection_norm_sq(top_count, y.values()))
}

/// Perturbation norms across a family of balanced structures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub k_bars: Vec<usize>,
    pub norms: Vec<f64>,
    /// Log-log slope of `||E||_F` against `K_bar`; `None` when every norm is 0.
    pub exponent: Option<f64>,
}

impl ScalingFit {
    pub fn is_degenerate(&self) -> bool {
        self.exponent.is_none()
    }
}

/// `||E||_F` of a synthesized graph.
pub fn perturbation_norm(structure: &SubclassStructure, delta: f64, xi: f64, seed: u64) -> Result<f64> {
    structure.require_balanced("perturbation analysis")?;
    let adj = synthesize_structured(structure, delta, xi, 1.0, seed)?;
    Ok(split_block_and_residual(&adj)?.2)
}

/// Fits the growth exponent of `||E||_F` in `K_bar` for a family of balanced
/// structures sharing one block size, each synthesized at `(delta, xi)`.
pub fn perturbation_norm_scaling(
    family: &[SubclassStructure],
    delta: f64,
    xi: f64,
    seed: u64,
) -> Result<ScalingFit> {
    if family.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "scaling fit needs at least 3 structures, got {}",
            family.len()
        )));
    }
    let block = family[0].sizes()[0];
    for pair in family.windows(2) {
        if pair[1].subclasses() <= pair[0].subclasses() {
            return Err(Error::InvalidArgument(
                "structures must have strictly increasing K_bar".into(),
            ));
        }
    }
    let mut norms = Vec::with_capacity(family.len());
    for s in family {
        if s.sizes()[0] != block {
            return Err(Error::InvalidArgument(
                "structures must share one sub-class size".into(),
            ));
        }
        norms.push(perturbation_norm(s, delta, xi, seed)?);
    }
    let k_bars: Vec<usize> = family.iter().map(|s| s.subclasses()).collect();
    let exponent = if norms.iter().all(|&x| x == 0.0) {
        None
    } else if norms.iter().any(|&x| x <= 0.0) {
        return Err(Error::Numerical(
            "some but not all perturbation norms vanish".into(),
        ));
    } else {
        let xs: Vec<f64> = k_bars.iter().map(|&k| (k as f64).ln()).collect();
        let ys: Vec<f64> = norms.iter().map(|x| x.ln()).collect();
        Some(ols_slope(&xs, &ys))
    };
    Ok(ScalingFit {
        k_bars,
        norms,
        exponent,
    })
}

/// Eigenvalue shift of a perturbed graph against its block part.
pub fn weyl_for_graph(adj: &AdjacencyMatrix) -> Result<BoundReport> {
    adj.structure().require_balanced("perturbation analysis")?;
    let (bar, tilde, _) = split_block_and_residual(adj)?;
    let e_norm = sym_operator_norm(&(tilde.matrix() - bar.matrix()))?;
    let clean = eigendecompose(&bar)?;
    let pert = eigendecompose(&tilde)?;
    weyl_check(&clean, &pert, e_norm)
}

/// Every per-block spectral inequality of a disconnected graph (`xi = 0`),
/// evaluated against the supplied column-ratio slack `delta_prime`.
///
/// `p` selects how many leading eigenpairs of each block enter the tail-sum
/// check (the blocks' share of the global top `p`).
pub fn block_spectrum_suite(adj: &AdjacencyMatrix, p: usize, delta_prime: f64) -> Result<Vec<BoundReport>> {
    let norm = normalize(adj)?;
    let spec = eigendecompose(&norm)?;
    let structure = adj.structure();
    let counts = spec.block_counts(p.min(spec.n())).ok_or(Error::NotBlockDiagonal)?;
    let mut reports = vec![BoundReport::upper(
        "column_ratio",
        delta_prime,
        verify_column_ratio(&norm)?,
    )];
    let (mut l1_slack, mut sq_slack, mut eig_slack, mut sum_slack) =
        (None::<BoundReport>, None::<BoundReport>, None::<BoundReport>, None::<BoundReport>);
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut ratio: f64 = 0.0;
    for s in 0..structure.subclasses() {
        let n_k = structure.sizes()[s];
        let v = spec.perron_vector(s).ok_or(Error::NotBlockDiagonal)?;
        let l1 = v.iter().map(|x| x.abs()).sum::<f64>().powi(2);
        keep_tightest(&mut l1_slack, BoundReport::lower("perron_l1", perron_l1_lower_bound(n_k, delta_prime), l1));

        let vals = spec.block_eigenvalues(s).ok_or(Error::NotBlockDiagonal)?;
        let sq: f64 = vals.iter().map(|l| l * l).sum();
        keep_tightest(&mut sq_slack, BoundReport::upper("squared_eigenvalues", squared_eigenvalue_bound(n_k, delta_prime), sq));

        let p_k = counts[s].max(1);
        let (per_eig, sum_bound) = eigenvalue_tail_bounds(n_k, delta_prime, p_k)?;
        let worst_tail = vals[1..].iter().fold(0.0f64, |m, l| m.max(l.abs()));
        keep_tightest(&mut eig_slack, BoundReport::upper("tail_eigenvalue", per_eig, worst_tail));
        let tail_sum: f64 = vals[1..p_k].iter().sum();
        keep_tightest(&mut sum_slack, BoundReport::upper("tail_sum", sum_bound, tail_sum));

        let (vmin, vmax) = v.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        lo = lo.min(vmin);
        hi = hi.max(vmax);
        ratio = ratio.max(vmax / vmin);
    }
    reports.extend([l1_slack, sq_slack, eig_slack, sum_slack].into_iter().flatten());
    let (e_min, e_max, ratio_bound) = perron_entry_bounds(structure.n_min(), structure.n_max(), delta_prime);
    reports.push(BoundReport::lower("perron_entry_min", e_min, lo));
    reports.push(BoundReport::upper("perron_entry_max", e_max, hi));
    reports.push(BoundReport::upper("perron_entry_ratio", ratio_bound, ratio));
    Ok(reports)
}

fn keep_tightest(slot: &mut Option<BoundReport>, candidate: BoundReport) {
    match slot {
        Some(r) if r.slack <= candidate.slack => {}
        _ => *slot = Some(candidate),
    }
}

/// Perturbation and its operator norm for a graph, as `(E, ||E||_2)`.
pub fn perturbation_matrix(adj: &AdjacencyMatrix) -> Result<(DMatrix<f64>, f64)> {
    let (bar, tilde, _) = split_block_and_residual(adj)?;
    let e = tilde.matrix() - bar.matrix();
    let norm = sym_operator_norm(&e)?;
    Ok((e, norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::NormalizedAdjacency;
    use crate::rng::SeededStream;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn perron_bound_examples() {
        assert_abs_diff_eq!(perron_l1_lower_bound(4, 0.0), 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(perron_l1_lower_bound(4, 0.1), 16.0 / (1.0 + 3.0 * 1.21), epsilon = 1e-12);
        assert_abs_diff_eq!(perron_l1_lower_bound(4, 0.1), 3.4557, epsilon = 1e-4);
    }

    #[test]
    fn perron_bound_below_measured() {
        for seed in 0..100u64 {
            let mut rng = SeededStream::new(seed, 99);
            let size = 2 + rng.below(30) as usize;
            let delta = rng.range(0.0, 0.3);
            let s = SubclassStructure::new(2, vec![size, 3], vec![0, 1]).unwrap();
            let adj = synthesize_structured(&s, delta, 0.0, 1.0, seed).unwrap();
            let spec = eigendecompose(&normalize(&adj).unwrap()).unwrap();
            let v = spec.perron_vector(0).unwrap();
            let l1 = v.iter().sum::<f64>().powi(2);
            assert!(perron_l1_lower_bound(size, crate::graph::delta_prime(delta)) <= l1 + 1e-12);
        }
    }

    #[test]
    fn tail_bounds_vanish_without_slack() {
        assert_eq!(eigenvalue_tail_bounds(10, 0.0, 4).unwrap(), (0.0, 0.0));
        assert!(eigenvalue_tail_bounds(3, 0.1, 4).is_err());
    }

    #[test]
    fn tail_bounds_above_measured() {
        let s = SubclassStructure::new(2, vec![50, 4], vec![0, 1]).unwrap();
        for seed in 0..5 {
            let adj = synthesize_structured(&s, 0.05, 0.0, 1.0, seed).unwrap();
            let dp = crate::graph::delta_prime(0.05);
            let spec = eigendecompose(&normalize(&adj).unwrap()).unwrap();
            let vals = spec.block_eigenvalues(0).unwrap();
            let (per, sum) = eigenvalue_tail_bounds(50, dp, 5).unwrap();
            assert!(vals[1..].iter().all(|l| l.abs() <= per));
            assert!(vals[1..5].iter().sum::<f64>() <= sum);
        }
    }

    #[test]
    fn tail_energy_trend() {
        let s = SubclassStructure::new(2, vec![40, 4], vec![0, 1]).unwrap();
        for &dp in &[0.01, 0.02, 0.04] {
            // invert delta' -> delta
            let delta = (1.0f64 + dp).powf(2.0 / 3.0) - 1.0;
            let adj = synthesize_structured(&s, delta, 0.0, 1.0, 7).unwrap();
            let spec = eigendecompose(&normalize(&adj).unwrap()).unwrap();
            let vals = spec.block_eigenvalues(0).unwrap();
            let tail: f64 = vals[1..].iter().map(|l| l * l).sum();
            assert!(tail / dp <= 5.0, "dp={dp} ratio={}", tail / dp);
        }
    }

    #[test]
    fn error_bound_at_zero_slack() {
        let s = SubclassStructure::balanced(2, 10, 10).unwrap();
        let (bias, var) = error_bound_values(&s, 20, 0.1, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(bias, (0.1f64 / 1.1).powi(2), epsilon = 1e-15);
        assert_abs_diff_eq!(bias, 8.2645e-3, epsilon = 1e-7);
        assert_abs_diff_eq!(var, 0.1 / 1.21, epsilon = 1e-15);
        let (_, var0) = error_bound_values(&s, 20, 0.1, 0.0, 0.0).unwrap();
        assert_eq!(var0, 0.0);
        // beta = 0 with no tail mass takes the limit
        let (_, var_b0) = error_bound_values(&s, 20, 0.0, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(var_b0, 0.1, epsilon = 1e-15);
        // beta = 0 with tail mass keeps the full tail
        let (_, var_tail) = error_bound_values(&s, 20, 0.0, 1.0, 0.1).unwrap();
        assert_abs_diff_eq!(var_tail, 0.1 + 0.1, epsilon = 1e-15);
    }

    #[test]
    fn error_bounds_hold_on_grid() {
        let s = SubclassStructure::balanced(3, 6, 8).unwrap();
        for &delta in &[0.0, 0.05, 0.1] {
            let adj = synthesize_structured(&s, delta, 0.0, 1.0, 3).unwrap();
            let spec = eigendecompose(&normalize(&adj).unwrap()).unwrap();
            let dp = crate::graph::delta_prime(delta);
            for &beta in &[0.01, 0.1, 1.0] {
                for &sigma in &[0.5, 1.0] {
                    let (b, v) = error_bounds(&spec, 12, beta, sigma, dp).unwrap();
                    assert!(b.holds && v.holds, "{b:?} {v:?}");
                }
            }
        }
    }

    #[test]
    fn bias_coefficient_value() {
        assert_abs_diff_eq!(bias_delta_coefficient(100, 10, 0.0), 2.7, epsilon = 1e-15);
    }

    fn inputs(k: usize, n_min: usize, n_max: usize, c_max: f64, dp: f64, beta: f64) -> ToleranceInputs {
        ToleranceInputs {
            classes: k,
            subclasses: k,
            n_min,
            n_max,
            c_max,
            delta: 0.0,
            delta_prime: dp,
            beta,
            p: k,
        }
    }

    #[test]
    fn tolerance_leading_terms() {
        let t = flip_tolerance_exact(&inputs(2, 10, 10, 1.0, 0.0, 0.1)).unwrap();
        assert_abs_diff_eq!(t.alpha_max, 0.5, epsilon = 1e-15);
        let t = flip_tolerance_exact(&inputs(10, 10, 10, 1.0 / 9.0, 0.0, 0.1)).unwrap();
        assert_abs_diff_eq!(t.alpha_max, 0.9, epsilon = 1e-15);
        let t = flip_tolerance_exact(&inputs(10, 10, 20, 1.0 / 9.0, 0.0, 0.1)).unwrap();
        assert_abs_diff_eq!(t.alpha_max, 9.0 / 11.0, epsilon = 1e-15);
        assert!(t.guaranteed);
    }

    #[test]
    fn tolerance_flags_large_delta() {
        let t = flip_tolerance_exact(&inputs(10, 100, 100, 1.0 / 9.0, 0.1, 0.01)).unwrap();
        assert!(!t.guaranteed);
        assert_eq!(t.alpha_max, 0.0);
        let t = flip_tolerance_exact(&inputs(2, 10, 10, 1.0, 1e-4, 0.0)).unwrap();
        assert!(!t.guaranteed);
    }

    #[test]
    fn tolerance_rejects_bad_inputs() {
        assert!(flip_tolerance_exact(&inputs(10, 10, 10, 0.05, 0.0, 0.1)).is_err());
        assert!(flip_tolerance_exact(&inputs(10, 20, 10, 0.5, 0.0, 0.1)).is_err());
    }

    #[test]
    fn perron_entry_bounds_at_zero_slack() {
        let (lo, hi, r) = perron_entry_bounds(9, 9, 0.0);
        assert_abs_diff_eq!(lo, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn tolerance_monotone(
            k in 2usize..12,
            n_min in 2usize..50,
            extra in 0usize..50,
            dp in 0.0f64..0.05,
            ddp in 0.0f64..0.05,
            c_frac in 0.0f64..1.0,
            dc in 0.0f64..0.5,
            beta in 0.01f64..10.0,
        ) {
            let lo = 1.0 / (k - 1) as f64;
            let c = lo + (1.0 - lo) * c_frac;
            let c2 = (c + dc).min(1.0);
            let n_max = n_min + extra;
            let base = flip_tolerance_exact(&inputs(k, n_min, n_max, c, dp, beta)).unwrap().alpha_max;
            let more_delta = flip_tolerance_exact(&inputs(k, n_min, n_max, c, dp + ddp, beta)).unwrap().alpha_max;
            let more_c = flip_tolerance_exact(&inputs(k, n_min, n_max, c2, dp, beta)).unwrap().alpha_max;
            let more_ratio = flip_tolerance_exact(&inputs(k, n_min, n_max + 1, c, dp, beta)).unwrap().alpha_max;
            prop_assert!(more_delta <= base + 1e-15);
            prop_assert!(more_c <= base + 1e-15);
            prop_assert!(more_ratio <= base + 1e-15);
            prop_assert!((0.0..1.0).contains(&base));
        }

        #[test]
        fn tail_bounds_monotone_in_slack(n in 2usize..100, dp in 0.0f64..0.3, d in 0.0f64..0.1) {
            let pk = n.min(5);
            let (a, b) = eigenvalue_tail_bounds(n, dp, pk).unwrap();
            let (c, e) = eigenvalue_tail_bounds(n, dp + d, pk).unwrap();
            prop_assert!(a <= c + 1e-15 && b <= e + 1e-15);
            prop_assert!(perron_l1_lower_bound(n, dp + d) <= perron_l1_lower_bound(n, dp) + 1e-12);
        }
    }

    #[test]
    fn weyl_trivial_and_random() {
        let s = SubclassStructure::balanced(2, 2, 4).unwrap();
        let adj = synthesize_structured(&s, 0.2, 0.0, 1.0, 1).unwrap();
        let spec = eigendecompose(&normalize(&adj).unwrap()).unwrap();
        let r = weyl_check(&spec, &spec, 0.0).unwrap();
        assert_eq!(r.observed_value, 0.0);
        assert!(r.holds);
        let base = normalize(&adj).unwrap().matrix().clone();
        for seed in 0..100 {
            let mut rng = SeededStream::new(seed, 5);
            let mut e = DMatrix::from_fn(8, 8, |_, _| rng.symmetric() * 0.1);
            e = &e + e.transpose();
            let pert = NormalizedAdjacency::from_symmetric(&base + &e, s.clone()).unwrap();
            let ps = eigendecompose(&pert).unwrap();
            let r = weyl_check(&spec, &ps, sym_operator_norm(&e).unwrap()).unwrap();
            assert!(r.holds, "{r:?}");
        }
    }

    #[test]
    fn weyl_on_cross_weights() {
        let s = SubclassStructure::balanced(2, 4, 6).unwrap();
        let adj = synthesize_structured(&s, 0.0, 0.05, 1.0, 2).unwrap();
        assert!(weyl_for_graph(&adj).unwrap().holds);
    }

    #[test]
    fn projection_alignment_examples() {
        let s = SubclassStructure::balanced(3, 6, 5).unwrap();
        let adj = synthesize_structured(&s, 0.0, 0.0, 1.0, 0).unwrap();
        let spec = eigendecompose(&normalize(&adj).unwrap()).unwrap();
        let y = clean_labels(&s);
        assert_abs_diff_eq!(projection_alignment(&spec, 6, &y).unwrap(), 30.0, epsilon = 1e-10);
        // labels orthogonal to every Perron vector
        let mut vals = DMatrix::zeros(30, 3);
        for b in s.blocks() {
            vals[(b.start, 0)] = 1.0;
            vals[(b.start + 1, 0)] = -1.0;
        }
        let y0 = LabelMatrix::new(vals, crate::labels::LabelKind::GaussianNoisy).unwrap();
        assert_abs_diff_eq!(projection_alignment(&spec, 6, &y0).unwrap(), 0.0, epsilon = 1e-20);
        assert!(projection_alignment(&spec, 31, &y).is_err());
    }

    #[test]
    fn scaling_degenerate_and_windowed() {
        let fam: Vec<_> = [2, 4, 8]
            .iter()
            .map(|&k| SubclassStructure::balanced(2, k, 20).unwrap())
            .collect();
        assert!(perturbation_norm_scaling(&fam, 0.0, 0.0, 1).unwrap().is_degenerate());
        let fit = perturbation_norm_scaling(&fam, 0.0, 0.02, 1).unwrap();
        assert!(fit.exponent.unwrap() <= 3.0, "{fit:?}");
        assert!(perturbation_norm_scaling(&fam[..2], 0.0, 0.02, 1).is_err());
        let unbalanced = SubclassStructure::new(2, vec![3, 4], vec![0, 1]).unwrap();
        assert!(perturbation_norm(&unbalanced, 0.0, 0.02, 1).is_err());
    }

    #[test]
    fn perturbation_linear_in_xi() {
        let s = SubclassStructure::balanced(2, 4, 20).unwrap();
        let a = perturbation_norm(&s, 0.0, 0.01, 3).unwrap();
        let b = perturbation_norm(&s, 0.0, 0.02, 3).unwrap();
        assert!((1.8..=2.2).contains(&(b / a)), "ratio {}", b / a);
    }

    #[test]
    fn block_suite_holds_and_detects_bad_slack() {
        let s = SubclassStructure::new(2, vec![7, 12, 5], vec![0, 1, 0]).unwrap();
        for seed in 0..20 {
            let delta = 0.3 * seed as f64 / 19.0;
            let adj = synthesize_structured(&s, delta, 0.0, 1.0, seed).unwrap();
            let reports = block_spectrum_suite(&adj, 8, crate::graph::delta_prime(delta)).unwrap();
            assert_eq!(reports.len(), 8);
            for r in &reports {
                assert!(r.holds, "seed {seed}: {r:?}");
            }
        }
        let adj = synthesize_structured(&s, 0.25, 0.0, 1.0, 1).unwrap();
        let wrong = block_spectrum_suite(&adj, 8, 0.25 * 0.5).unwrap();
        assert!(!wrong.iter().find(|r| r.name == "column_ratio").unwrap().holds);
    }

    #[test]
    fn report_orientation() {
        let r = BoundReport::lower("x", 2.0, 1.0);
        assert!(!r.holds);
        assert_eq!(r.slack, -1.0);
        let r = BoundReport::upper("x", 2.0, 2.0 + 1e-10);
        assert!(r.holds);
    }
}
