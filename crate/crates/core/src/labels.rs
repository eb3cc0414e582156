//! Clean one-hot labels and the two corruption models: additive Gaussian noise
//! and sub-class-dependent label flipping.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{streams, SeededStream};
use crate::structure::SubclassStructure;

/// Slack used when flooring products such as `alpha * n` that are integral in
/// exact arithmetic.
const FLOOR_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelKind {
    Clean,
    GaussianNoisy,
    FlipNoisy,
}

impl LabelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelKind::Clean => "clean",
            LabelKind::GaussianNoisy => "gaussian-noisy",
            LabelKind::FlipNoisy => "flip-noisy",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "clean" => Some(LabelKind::Clean),
            "gaussian-noisy" => Some(LabelKind::GaussianNoisy),
            "flip-noisy" => Some(LabelKind::FlipNoisy),
            _ => None,
        }
    }
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `n x K` label matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    values: DMatrix<f64>,
    kind: LabelKind,
}

impl LabelMatrix {
    /// Wrap a matrix, checking the row shape that `kind` promises.
    pub fn new(values: DMatrix<f64>, kind: LabelKind) -> Result<Self> {
        if kind != LabelKind::GaussianNoisy {
            for (i, row) in values.row_iter().enumerate() {
                let ones = row.iter().filter(|&&x| x == 1.0).count();
                let zeros = row.iter().filter(|&&x| x == 0.0).count();
                if ones != 1 || ones + zeros != row.len() {
                    return Err(Error::InvalidArgument(format!(
                        "row {i} of a {kind} label matrix is not a standard basis vector"
                    )));
                }
            }
        }
        Ok(Self { values, kind })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn kind(&self) -> LabelKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn classes(&self) -> usize {
        self.values.ncols()
    }

    /// Column of the single 1 in each row (one-hot kinds only).
    pub fn argmax_rows(&self) -> Vec<usize> {
        self.values
            .row_iter()
            .map(|r| {
                let mut best = 0;
                for j in 1..r.len() {
                    if r[j] > r[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }

    pub(crate) fn require_kind(&self, kind: LabelKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::WrongLabelKind {
                expected: kind.as_str(),
                got: self.kind.as_str(),
            })
        }
    }
}

/// Per-sub-class corruption fractions and wrong-label distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlipSpec {
    /// Fraction of each sub-class that is relabeled.
    pub alphas: Vec<f64>,
    /// `flip_dist[s][k]`: share of sub-class `s`'s corrupted rows sent to class `k`.
    pub flip_dist: Vec<Vec<f64>>,
    pub seed: u64,
}

impl FlipSpec {
    pub fn validate(&self, structure: &SubclassStructure) -> Result<()> {
        let k_bar = structure.subclasses();
        let k = structure.classes();
        if self.alphas.len() != k_bar || self.flip_dist.len() != k_bar {
            return Err(Error::DimensionMismatch {
                what: "flip spec entries vs sub-class count",
                expected: k_bar,
                got: self.alphas.len().min(self.flip_dist.len()),
            });
        }
        for (s, (&a, dist)) in self.alphas.iter().zip(&self.flip_dist).enumerate() {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidArgument(format!(
                    "alpha for sub-class {s} is {a}, outside [0, 1]"
                )));
            }
            if dist.len() != k {
                return Err(Error::DimensionMismatch {
                    what: "flip distribution length vs class count",
                    expected: k,
                    got: dist.len(),
                });
            }
            let own = structure.class_of()[s];
            if dist[own] != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "flip distribution of sub-class {s} puts mass {} on its own class {own}",
                    dist[own]
                )));
            }
            if dist.iter().any(|&c| !(c >= 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "flip distribution of sub-class {s} has a negative entry"
                )));
            }
            let total: f64 = dist.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "flip distribution of sub-class {s} sums to {total}, expected 1"
                )));
            }
        }
        Ok(())
    }

    /// Largest share of one sub-class's wrong labels landing on one class.
    pub fn c_max(&self) -> f64 {
        self.flip_dist
            .iter()
            .flatten()
            .fold(0.0f64, |a, &c| a.max(c))
    }
}

/// Realized corruption counts.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipCounts {
    /// `counts[s][k]`: rows of sub-class `s` relabeled to class `k`.
    pub counts: Vec<Vec<usize>>,
    /// `alpha_s * n_s - floor(alpha_s * n_s)` for each sub-class.
    pub shortfall: Vec<f64>,
}

impl FlipCounts {
    pub fn corrupted(&self, s: usize) -> usize {
        self.counts[s].iter().sum()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }
}

/// Row `i` is `e_{class of i's sub-class}`.
pub fn clean_labels(structure: &SubclassStructure) -> LabelMatrix {
    let classes = structure.point_classes();
    let values = DMatrix::from_fn(structure.n(), structure.classes(), |i, j| {
        if classes[i] == j {
            1.0
        } else {
            0.0
        }
    });
    LabelMatrix {
        values,
        kind: LabelKind::Clean,
    }
}

/// `Y + dY` where every entry of `dY` is an independent `N(0, sigma^2 / K)` draw.
/// Draws fill `dY` column by column.
pub fn gaussian_noise(y: &LabelMatrix, sigma: f64, seed: u64) -> Result<LabelMatrix> {
    y.require_kind(LabelKind::Clean)?;
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sigma must be nonnegative, got {sigma}"
        )));
    }
    let (n, k) = y.values.shape();
    let scale = sigma / (k as f64).sqrt();
    let mut values = y.values.clone();
    if sigma > 0.0 {
        let mut rng = SeededStream::new(seed, streams::GAUSSIAN_NOISE);
        for j in 0..k {
            for i in 0..n {
                values[(i, j)] += scale * rng.standard_normal();
            }
        }
    }
    Ok(LabelMatrix {
        values,
        kind: LabelKind::GaussianNoisy,
    })
}

/// Relabel `floor(alpha_s * n_s)` uniformly chosen rows of each sub-class.
///
/// The corrupted rows of sub-class `s` are split across target classes by the
/// largest-remainder method applied to `flip_dist[s][k] * m_s`; equal
/// remainders are ordered by a seeded permutation. Rows are drawn without
/// replacement and assigned to targets in ascending class order.
pub fn flip_noise(
    y: &LabelMatrix,
    structure: &SubclassStructure,
    spec: &FlipSpec,
) -> Result<(LabelMatrix, FlipCounts)> {
    y.require_kind(LabelKind::Clean)?;
    if y.n() != structure.n() || y.classes() != structure.classes() {
        return Err(Error::DimensionMismatch {
            what: "label matrix vs structure",
            expected: structure.n(),
            got: y.n(),
        });
    }
    spec.validate(structure)?;
    let k = structure.classes();
    let mut rows_rng = SeededStream::new(spec.seed, streams::FLIP_ROWS);
    let mut ties_rng = SeededStream::new(spec.seed, streams::FLIP_TIES);
    let mut values = y.values.clone();
    let mut counts = Vec::with_capacity(structure.subclasses());
    let mut shortfall = Vec::with_capacity(structure.subclasses());

    for (s, block) in structure.blocks().enumerate() {
        let exact = spec.alphas[s] * block.len() as f64;
        let m = (exact + FLOOR_EPS).floor() as usize;
        shortfall.push((exact - m as f64).max(0.0));

        let per_target = apportion(&spec.flip_dist[s], m, &mut ties_rng);
        let mut rows: Vec<usize> = block.clone().collect();
        rows_rng.choose_prefix(&mut rows, m);
        let own = structure.class_of()[s];
        let mut next = 0;
        for (target, &count) in per_target.iter().enumerate() {
            for &row in &rows[next..next + count] {
                values[(row, own)] = 0.0;
                values[(row, target)] = 1.0;
            }
            next += count;
        }
        debug_assert_eq!(next, m);
        debug_assert_eq!(per_target.len(), k);
        counts.push(per_target);
    }

    Ok((
        LabelMatrix {
            values,
            kind: LabelKind::FlipNoisy,
        },
        FlipCounts { counts, shortfall },
    ))
}

/// Largest-remainder apportionment of `total` items by `shares`.
fn apportion(shares: &[f64], total: usize, ties: &mut SeededStream) -> Vec<usize> {
    let mut tie_order: Vec<usize> = (0..shares.len()).collect();
    ties.shuffle(&mut tie_order);
    let mut rank = vec![0; shares.len()];
    for (r, &k) in tie_order.iter().enumerate() {
        rank[k] = r;
    }

    let mut counts = vec![0usize; shares.len()];
    let mut remainders = Vec::with_capacity(shares.len());
    for (k, &c) in shares.iter().enumerate() {
        let quota = c * total as f64;
        let base = (quota + FLOOR_EPS).floor();
        counts[k] = base as usize;
        if c > 0.0 {
            // quantized so near-equal remainders compare as ties
            let rem = ((quota - base).max(0.0) * 1e9).round() as i64;
            remainders.push((k, rem));
        }
    }
    let assigned: usize = counts.iter().sum();
    let mut left = total.saturating_sub(assigned);
    remainders.sort_by(|a, b| b.1.cmp(&a.1).then(rank[a.0].cmp(&rank[b.0])));
    for &(k, _) in remainders.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[k] += 1;
        left -= 1;
    }
    counts
}

/// Every sub-class corrupted at rate `alpha`, wrong labels spread evenly over
/// the `K - 1` other classes.
pub fn symmetric_flip_spec(structure: &SubclassStructure, alpha: f64, seed: u64) -> Result<FlipSpec> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha {alpha} is outside [0, 1]"
        )));
    }
    let k = structure.classes();
    let share = 1.0 / (k - 1) as f64;
    let flip_dist = structure
        .class_of()
        .iter()
        .map(|&own| (0..k).map(|c| if c == own { 0.0 } else { share }).collect())
        .collect();
    Ok(FlipSpec {
        alphas: vec![alpha; structure.subclasses()],
        flip_dist,
        seed,
    })
}
