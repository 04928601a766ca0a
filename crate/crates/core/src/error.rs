use thiserror::Error;

/// Errors raised by the numeric kernels, problem constructors and optimizers.
///
/// Divergence is deliberately not represented here: a run that blows up is a
/// result, reported through [`crate::harness::RunStatus::Diverged`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("closed-form eigenvalues support at most 3x3 matrices, got {rows}x{cols}")]
    UnsupportedSize { rows: usize, cols: usize },

    #[error("condition number must be >= 1, got {0}")]
    InvalidKappa(f64),

    #[error("quadratic dimension must be >= 2, got {0}")]
    InvalidDimension(usize),

    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),

    #[error("method {0} has no linear per-mode update matrix")]
    UnknownMethod(String),

    #[error("malformed record: {0}")]
    Parse(String),

    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
