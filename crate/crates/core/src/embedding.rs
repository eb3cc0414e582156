//! Normalized adjacency, its eigensystem, and the spectral-contrastive
//! representation `F = V_p diag(sqrt(lambda_p)) R`.
//!
//! `F` minimizes `||A_bar - F F^T||_F^2` over `n x p` matrices, which is the
//! matrix-factorization form of the spectral contrastive loss. When the
//! sub-classes are disconnected the top eigenvalue 1 has multiplicity `K_bar`,
//! so block structure is exploited to return the canonical per-block basis.

use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{max_abs, max_asymmetry, symmetrize_in_place, AdjacencyMatrix, ZERO_TOL};
use crate::linalg::{random_orthogonal, sym_eigen_desc};
use crate::structure::SubclassStructure;

/// Inputs with asymmetry above this are rejected by [`eigendecompose`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenvalues within this distance are ordered by (block, within-block index).
pub const TIE_TOL: f64 = 1e-12;

/// Eigenvalues in `[-CLIP_TOL, 0)` are treated as zero before taking roots.
pub const CLIP_TOL: f64 = 1e-9;

/// `D^{-1/2} A D^{-1/2}` with the degrees it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    matrix: DMatrix<f64>,
    degrees: Option<DVector<f64>>,
    structure: SubclassStructure,
}

impl NormalizedAdjacency {
    /// Wrap an arbitrary symmetric matrix (no degrees attached), e.g. for
    /// exercising the eigensolver on matrices that are not normalized graphs.
    pub fn from_symmetric(matrix: DMatrix<f64>, structure: SubclassStructure) -> Result<Self> {
        if matrix.nrows() != structure.n() || matrix.ncols() != structure.n() {
            return Err(Error::DimensionMismatch {
                what: "matrix size vs structure point count",
                expected: structure.n(),
                got: matrix.nrows(),
            });
        }
        Ok(Self {
            matrix,
            degrees: None,
            structure,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn degrees(&self) -> Option<&DVector<f64>> {
        self.degrees.as_ref()
    }

    pub fn structure(&self) -> &SubclassStructure {
        &self.structure
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// True when every cross-sub-class entry is zero (relative to the largest entry).
    pub fn is_block_diagonal(&self) -> bool {
        is_block_diagonal(&self.matrix, &self.structure)
    }
}

fn is_block_diagonal(m: &DMatrix<f64>, structure: &SubclassStructure) -> bool {
    let zero = ZERO_TOL * max_abs(m);
    let sub = structure.point_subclasses();
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| sub[i] == sub[j] || m[(i, j)].abs() <= zero))
}

/// Position of an eigenpair inside its diagonal block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockIndex {
    pub block: usize,
    /// Rank within the block, 0 = largest.
    pub index: usize,
}

/// Full eigensystem, eigenvalues descending, eigenvectors as orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    block_support: Option<Vec<BlockIndex>>,
    structure: SubclassStructure,
}

impl Spectrum {
    /// Assemble a spectrum from stored parts (e.g. a loaded export). Columns are
    /// re-sorted by descending eigenvalue unless already descending up to near-ties.
    pub fn from_parts(
        eigenvalues: DVector<f64>,
        eigenvectors: DMatrix<f64>,
        structure: SubclassStructure,
    ) -> Result<Self> {
        let n = structure.n();
        if eigenvalues.len() != n || eigenvectors.nrows() != n || eigenvectors.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "spectrum size vs structure point count",
                expected: n,
                got: eigenvalues.len(),
            });
        }
        let mut order: Vec<usize> = (0..n).collect();
        let descending = eigenvalues
            .as_slice()
            .windows(2)
            .all(|w| w[1] <= w[0] + TIE_TOL);
        if !descending {
            order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
        }
        Ok(Self {
            eigenvalues: DVector::from_iterator(n, order.iter().map(|&i| eigenvalues[i])),
            eigenvectors: eigenvectors.select_columns(&order),
            block_support: None,
            structure,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn block_support(&self) -> Option<&[BlockIndex]> {
        self.block_support.as_deref()
    }

    pub fn structure(&self) -> &SubclassStructure {
        &self.structure
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `||V_k V_k^T Y||_F^2` for the top `k` eigenvectors.
    pub fn top_projection_norm_sq(&self, k: usize, y: &DMatrix<f64>) -> f64 {
        let vk = self.eigenvectors.columns(0, k);
        (vk.transpose() * y).norm_squared()
    }

    /// Descending eigenvalues of diagonal block `s`. Needs block support.
    pub fn block_eigenvalues(&self, s: usize) -> Option<Vec<f64>> {
        let support = self.block_support.as_ref()?;
        let mut vals: Vec<(usize, f64)> = support
            .iter()
            .zip(self.eigenvalues.iter())
            .filter(|(b, _)| b.block == s)
            .map(|(b, &l)| (b.index, l))
            .collect();
        vals.sort_by_key(|&(i, _)| i);
        Some(vals.into_iter().map(|(_, l)| l).collect())
    }

    /// Leading eigenvector of block `s`, restricted to the block's points.
    pub fn perron_vector(&self, s: usize) -> Option<DVector<f64>> {
        let support = self.block_support.as_ref()?;
        let col = support
            .iter()
            .position(|b| b.block == s && b.index == 0)?;
        let range = self.structure.block(s);
        Some(
            self.eigenvectors
                .column(col)
                .rows(range.start, range.len())
                .into_owned(),
        )
    }

    /// Number of eigenpairs of each block among the top `p` columns.
    pub fn block_counts(&self, p: usize) -> Option<Vec<usize>> {
        let support = self.block_support.as_ref()?;
        let mut counts = vec![0; self.structure.subclasses()];
        for b in &support[..p] {
            counts[b.block] += 1;
        }
        Some(counts)
    }

    /// Hex SHA-256 over all eigenvalues and the first `p` eigenvectors.
    pub fn digest(&self, p: usize) -> String {
        let mut h = Sha256::new();
        h.update((self.n() as u64).to_le_bytes());
        h.update((p as u64).to_le_bytes());
        for v in self.eigenvalues.iter() {
            h.update(v.to_bits().to_le_bytes());
        }
        for v in self.eigenvectors.columns(0, p).iter() {
            h.update(v.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Spectral-contrastive embedding, one row per augmented point.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationMatrix {
    values: DMatrix<f64>,
    rank_p: usize,
    source_spectrum_hash: String,
}

impl RepresentationMatrix {
    /// Wrap an arbitrary feature matrix (no spectrum binding).
    pub fn from_values(values: DMatrix<f64>) -> Self {
        let rank_p = values.ncols();
        Self {
            values,
            rank_p,
            source_spectrum_hash: String::new(),
        }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn rank_p(&self) -> usize {
        self.rank_p
    }

    pub fn source_spectrum_hash(&self) -> &str {
        &self.source_spectrum_hash
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }
}

/// `D^{-1/2} A D^{-1/2}`.
pub fn normalize(adj: &AdjacencyMatrix) -> Result<NormalizedAdjacency> {
    let w = adj.weights();
    let degrees = DVector::from_iterator(w.nrows(), w.row_iter().map(|r| r.sum()));
    if let Some(i) = degrees.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::IsolatedVertex(i));
    }
    let inv_sqrt = degrees.map(|d| 1.0 / d.sqrt());
    let mut matrix = DMatrix::from_fn(w.nrows(), w.ncols(), |i, j| {
        w[(i, j)] * inv_sqrt[i] * inv_sqrt[j]
    });
    symmetrize_in_place(&mut matrix);
    Ok(NormalizedAdjacency {
        matrix,
        degrees: Some(degrees),
        structure: adj.structure().clone(),
    })
}

/// Full eigensystem in descending order.
///
/// Block-diagonal inputs are decomposed block by block, so the eigenvectors are
/// the zero-padded block eigenvectors and each block's leading vector is
/// entrywise nonnegative. Near-ties (within [`TIE_TOL`]) are ordered by block,
/// then by rank within the block.
pub fn eigendecompose(norm: &NormalizedAdjacency) -> Result<Spectrum> {
    let asym = max_asymmetry(&norm.matrix);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let mut m = norm.matrix.clone();
    symmetrize_in_place(&mut m);
    let n = m.nrows();
    let structure = &norm.structure;

    // (eigenvalue, block, index-in-block, column vector)
    let mut pairs: Vec<(f64, BlockIndex, DVector<f64>)> = Vec::with_capacity(n);
    let block_diagonal = is_block_diagonal(&m, structure);
    if block_diagonal {
        for (s, range) in structure.blocks().enumerate() {
            let len = range.len();
            let sub = m.view((range.start, range.start), (len, len)).into_owned();
            let (vals, vecs) = sym_eigen_desc(&sub)?;
            for (i, &val) in vals.iter().enumerate() {
                let mut full = DVector::zeros(n);
                full.rows_mut(range.start, len).copy_from(&vecs.column(i));
                pairs.push((val, BlockIndex { block: s, index: i }, full));
            }
        }
    } else {
        let (vals, vecs) = sym_eigen_desc(&m)?;
        for (i, &val) in vals.iter().enumerate() {
            pairs.push((val, BlockIndex { block: 0, index: i }, vecs.column(i).into_owned()));
        }
    }

    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end - 1].0 - pairs[end].0 <= TIE_TOL {
            end += 1;
        }
        pairs[start..end].sort_by_key(|p| (p.1.block, p.1.index));
        start = end;
    }

    let eigenvalues = DVector::from_iterator(n, pairs.iter().map(|p| p.0));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (j, p) in pairs.iter().enumerate() {
        eigenvectors.set_column(j, &p.2);
    }
    let block_support = block_diagonal.then(|| pairs.iter().map(|p| p.1).collect());
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        block_support,
        structure: structure.clone(),
    })
}

/// `F = V_p diag(sqrt(lambda_1..lambda_p)) R`, with `R = I` when no rotation
/// seed is given and a seeded random orthogonal matrix otherwise.
pub fn build_representation(
    spec: &Spectrum,
    p: usize,
    rotation_seed: Option<u64>,
) -> Result<RepresentationMatrix> {
    let k_bar = spec.structure.subclasses();
    if p < k_bar {
        return Err(Error::RankTooSmall { p, k_bar });
    }
    if p > spec.n() {
        return Err(Error::InvalidArgument(format!(
            "rank {p} exceeds point count {}",
            spec.n()
        )));
    }
    let scales = clipped_top(spec, p)?.map(f64::sqrt);
    let mut values = spec.eigenvectors.columns(0, p).into_owned();
    for (mut col, &s) in values.column_iter_mut().zip(scales.iter()) {
        col *= s;
    }
    if let Some(seed) = rotation_seed {
        values = values * random_orthogonal(p, seed);
    }
    Ok(RepresentationMatrix {
        values,
        rank_p: p,
        source_spectrum_hash: spec.digest(p),
    })
}

/// Top `p` eigenvalues with `[-CLIP_TOL, 0)` clipped to zero.
pub(crate) fn clipped_top(spec: &Spectrum, p: usize) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(p);
    for i in 0..p {
        let l = spec.eigenvalues[i];
        if l < -CLIP_TOL {
            return Err(Error::NegativeEigenvalue { index: i, value: l });
        }
        out[i] = l.max(0.0);
    }
    Ok(out)
}

/// `||A_bar - F F^T||_F^2`.
pub fn factorization_loss(norm: &NormalizedAdjacency, f: &RepresentationMatrix) -> Result<f64> {
    if f.n() != norm.n() {
        return Err(Error::DimensionMismatch {
            what: "representation rows vs adjacency size",
            expected: norm.n(),
            got: f.n(),
        });
    }
    Ok((&norm.matrix - &f.values * f.values.transpose()).norm_squared())
}

/// Largest in-block column-entry ratio of a block-diagonal normalized
/// adjacency, minus one.
pub fn verify_column_ratio(norm: &NormalizedAdjacency) -> Result<f64> {
    if !norm.is_block_diagonal() {
        return Err(Error::NotBlockDiagonal);
    }
    let zero = ZERO_TOL * max_abs(&norm.matrix);
    let mut worst: f64 = 0.0;
    for block in norm.structure.blocks() {
        for j in block.clone() {
            let (lo, hi) = block.clone().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| {
                let a = norm.matrix[(s, j)];
                (lo.min(a), hi.max(a))
            });
            if hi <= zero {
                continue;
            }
            if lo <= zero {
                return Ok(f64::INFINITY);
            }
            worst = worst.max(hi / lo - 1.0);
        }
    }
    Ok(worst)
}
