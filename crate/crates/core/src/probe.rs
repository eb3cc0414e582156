//! Closed-form ridge probe on a representation, its ground-truth metrics, and
//! the exact expected error under Gaussian label noise.

use nalgebra::{DMatrix, DVector};

use crate::embedding::{clipped_top, RepresentationMatrix, Spectrum};
use crate::error::{Error, Result};
use crate::labels::{LabelKind, LabelMatrix};

/// Largest condition estimate accepted for an unregularized fit.
pub const MAX_CONDITION: f64 = 1e12;

/// Relative gap under which two output scores count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeFit {
    /// `p x K` head `W = (F^T F + beta I)^{-1} F^T Y_hat`.
    pub weights: DMatrix<f64>,
    pub beta: f64,
    /// `n x K` training outputs `F W`.
    pub predictions: DMatrix<f64>,
}

/// Argmax agreement with clean labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyReport {
    pub accuracy: f64,
    /// Rows whose top score is shared (within [`TIE_TOL`]) by another class.
    pub ties: usize,
    pub correct: usize,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasVariance {
    pub bias_sq: f64,
    pub variance: f64,
    pub total: f64,
    /// `b_i = lambda_i / (lambda_i + beta)` for the top `p` eigenvalues.
    pub shrinkages: Vec<f64>,
}

/// Minimizer of `||Y_hat - F W||_F^2 + beta ||W||_F^2`.
pub fn ridge_fit(f: &RepresentationMatrix, y_noisy: &LabelMatrix, beta: f64) -> Result<ProbeFit> {
    let fv = f.values();
    if fv.nrows() != y_noisy.n() {
        return Err(Error::DimensionMismatch {
            what: "representation rows vs label rows",
            expected: fv.nrows(),
            got: y_noisy.n(),
        });
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "beta must be nonnegative, got {beta}"
        )));
    }
    let p = fv.ncols();
    let mut gram = fv.transpose() * fv;
    for i in 0..p {
        gram[(i, i)] += beta;
    }
    if beta == 0.0 {
        let cond = condition_estimate(&gram);
        if !(cond < MAX_CONDITION) {
            return Err(Error::RankDeficient(cond));
        }
    }
    let rhs = fv.transpose() * y_noisy.values();
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::RankDeficient(f64::INFINITY))?;
    let weights = chol.solve(&rhs);
    let predictions = fv * &weights;
    Ok(ProbeFit {
        weights,
        beta,
        predictions,
    })
}

fn condition_estimate(gram: &DMatrix<f64>) -> f64 {
    let eig = gram.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Value of the ridge objective at `w`.
pub fn ridge_objective(f: &RepresentationMatrix, y: &LabelMatrix, beta: f64, w: &DMatrix<f64>) -> f64 {
    (y.values() - f.values() * w).norm_squared() + beta * w.norm_squared()
}

/// `(1/n) ||Y - F W||_F^2` against the clean labels.
pub fn ground_truth_mse(fit: &ProbeFit, y_clean: &LabelMatrix) -> Result<f64> {
    y_clean.require_kind(LabelKind::Clean)?;
    check_shape(fit, y_clean)?;
    Ok((y_clean.values() - &fit.predictions).norm_squared() / y_clean.n() as f64)
}

/// Fraction of rows whose output argmax is the clean class. Ties go to the
/// lowest class index and are counted separately.
pub fn ground_truth_accuracy(fit: &ProbeFit, y_clean: &LabelMatrix) -> Result<AccuracyReport> {
    check_shape(fit, y_clean)?;
    Ok(accuracy_of(&fit.predictions, &y_clean.argmax_rows()))
}

pub(crate) fn accuracy_of(predictions: &DMatrix<f64>, truth: &[usize]) -> AccuracyReport {
    let mut correct = 0;
    let mut ties = 0;
    for (row, &t) in predictions.row_iter().zip(truth) {
        let mut best = 0;
        for j in 1..row.len() {
            if row[j] > row[best] {
                best = j;
            }
        }
        let top = row[best];
        let tol = TIE_TOL * top.abs().max(1.0);
        if (0..row.len()).any(|j| j != best && (top - row[j]).abs() <= tol) {
            ties += 1;
        }
        if best == t {
            correct += 1;
        }
    }
    let rows = truth.len();
    AccuracyReport {
        accuracy: if rows == 0 { 0.0 } else { correct as f64 / rows as f64 },
        ties,
        correct,
        rows,
    }
}

fn check_shape(fit: &ProbeFit, y: &LabelMatrix) -> Result<()> {
    if fit.predictions.shape() != y.values().shape() {
        return Err(Error::DimensionMismatch {
            what: "prediction rows vs label rows",
            expected: fit.predictions.nrows(),
            got: y.n(),
        });
    }
    Ok(())
}

/// Exact `E_dY (1/n)||Y - F W||_F^2` for `F` built from the top `p` eigenpairs
/// of `spec` and `dY` with i.i.d. `N(0, sigma^2/K)` entries:
///
/// `bias^2 = 1 + (1/n) sum_i sum_j (b_i^2 - 2 b_i) (v_i^T y_j)^2`,
/// `variance = (sigma^2/n) sum_i b_i^2`.
pub fn expected_error_closed_form(
    spec: &Spectrum,
    p: usize,
    y_clean: &LabelMatrix,
    beta: f64,
    sigma: f64,
) -> Result<BiasVariance> {
    y_clean.require_kind(LabelKind::Clean)?;
    let n = spec.n();
    if p == 0 || p > n {
        return Err(Error::InvalidArgument(format!(
            "rank {p} is outside 1..={n}"
        )));
    }
    if y_clean.n() != n {
        return Err(Error::DimensionMismatch {
            what: "label rows vs spectrum size",
            expected: n,
            got: y_clean.n(),
        });
    }
    if !(beta >= 0.0) || !(sigma >= 0.0) {
        return Err(Error::InvalidArgument(
            "beta and sigma must be nonnegative".into(),
        ));
    }
    let lambdas = clipped_top(spec, p)?;
    let shrinkages: Vec<f64> = lambdas.iter().map(|&l| shrinkage(l, beta)).collect();
    // (v_i^T y_j)^2 summed over j, for each i
    let proj = spec.eigenvectors().columns(0, p).transpose() * y_clean.values();
    let alignment: DVector<f64> =
        DVector::from_iterator(p, proj.row_iter().map(|r| r.norm_squared()));
    let nf = n as f64;
    let y_sq = y_clean.values().norm_squared() / nf;
    let bias_sq = y_sq
        + shrinkages
            .iter()
            .zip(alignment.iter())
            .map(|(&b, &a)| (b * b - 2.0 * b) * a)
            .sum::<f64>()
            / nf;
    let variance = sigma * sigma / nf * shrinkages.iter().map(|b| b * b).sum::<f64>();
    Ok(BiasVariance {
        bias_sq,
        variance,
        total: bias_sq + variance,
        shrinkages,
    })
}

/// `lambda / (lambda + beta)`, taking the `beta -> 0+` limit when both vanish.
pub fn shrinkage(lambda: f64, beta: f64) -> f64 {
    if lambda == 0.0 {
        0.0
    } else {
        lambda / (lambda + beta)
    }
}
