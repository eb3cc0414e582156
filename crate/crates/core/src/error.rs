use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("isolated vertex at index {0}: row sum is zero")]
    IsolatedVertex(usize),

    #[error("matrix is not symmetric: max asymmetry {0:e}")]
    NotSymmetric(f64),

    #[error("matrix is not block-diagonal with respect to its sub-class structure")]
    NotBlockDiagonal,

    #[error("assumption framework inapplicable: {0}")]
    AssumptionInapplicable(String),

    #[error("rank {p} is below the sub-class count {k_bar}")]
    RankTooSmall { p: usize, k_bar: usize },

    #[error("eigenvalue {value:e} at index {index} is negative; cannot take its square root")]
    NegativeEigenvalue { index: usize, value: f64 },

    #[error("Gram matrix is rank deficient (condition estimate {0:e})")]
    RankDeficient(f64),

    #[error("label matrix has kind {got}, expected {expected}")]
    WrongLabelKind {
        expected: &'static str,
        got: &'static str,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing column(s) in {path}: {columns}")]
    MissingColumns { path: PathBuf, columns: String },

    #[error("output already exists: {0} (pass --overwrite to replace)")]
    OutputExists(PathBuf),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("plot error: {0}")]
    Plot(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether this error came from the filesystem rather than from bad input.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::OutputExists(_))
    }
}
