//! Singular-spectrum profile of an arbitrary matrix and how well a target
//! vector aligns with its leading left singular directions.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative gap under which two singular values at the cutoff count as tied.
pub const CUTOFF_TIE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentReport {
    pub top_k: usize,
    /// `||Pi_I y||`, projection onto the top `top_k` left singular vectors.
    pub pi_i_norm: f64,
    /// `||y - Pi_I y||`.
    pub pi_n_norm: f64,
    /// `||J J^T y|| / ||J J^T||_F`.
    pub ratio: f64,
    pub singular_values: Vec<f64>,
    /// The `top_k`-th and next singular values coincide, so the head
    /// subspace is not unique.
    pub cutoff_tie: bool,
}

/// Left singular vectors (columns) and singular values, descending.
/// Stable sort keeps index order among equal values.
fn left_svd(j: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let svd = j.clone().try_svd(true, false, f64::EPSILON, 0).ok_or_else(|| {
        Error::Numerical("singular value decomposition did not converge".into())
    })?;
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv = order.iter().map(|&i| svd.singular_values[i]).collect();
    let cols: Vec<DVector<f64>> = order.iter().map(|&i| u.column(i).into_owned()).collect();
    Ok((DMatrix::from_columns(&cols), sv))
}

fn check_top_k(j: &DMatrix<f64>, top_k: usize) -> Result<()> {
    let m = j.nrows().min(j.ncols());
    if top_k == 0 || top_k > m {
        return Err(Error::InvalidArgument(format!(
            "top_k {top_k} is outside 1..={m}"
        )));
    }
    Ok(())
}

pub fn alignment_report(j: &DMatrix<f64>, y: &DVector<f64>, top_k: usize) -> Result<AlignmentReport> {
    if j.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "target length vs matrix rows",
            expected: j.nrows(),
            got: y.len(),
        });
    }
    check_top_k(j, top_k)?;
    let (u, sv) = left_svd(j)?;
    let head = u.columns(0, top_k);
    let pi_i = &head * (head.transpose() * y);
    let pi_n = y - &pi_i;
    let cutoff_tie = sv
        .get(top_k)
        .is_some_and(|&next| (sv[top_k - 1] - next).abs() <= CUTOFF_TIE_TOL * sv[0].max(f64::MIN_POSITIVE));
    if cutoff_tie {
        log::warn!("singular values tie at the top-{top_k} cutoff; head subspace chosen by index");
    }
    let jjt = j * j.transpose();
    let jjt_norm = jjt.norm();
    let ratio = if jjt_norm > 0.0 {
        (&jjt * y).norm() / jjt_norm
    } else {
        0.0
    };
    Ok(AlignmentReport {
        top_k,
        pi_i_norm: pi_i.norm(),
        pi_n_norm: pi_n.norm(),
        ratio,
        singular_values: sv,
        cutoff_tie,
    })
}

/// Share of the singular-value sum carried by the top `top_k` values, and the rest.
pub fn spectrum_gap(j: &DMatrix<f64>, top_k: usize) -> Result<(f64, f64)> {
    check_top_k(j, top_k)?;
    let (_, sv) = left_svd(j)?;
    let total: f64 = sv.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument(
            "spectrum gap is undefined for a zero matrix".into(),
        ));
    }
    let head = (sv[..top_k].iter().sum::<f64>() / total).min(1.0);
    Ok((head, 1.0 - head))
}
