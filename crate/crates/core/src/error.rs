use thiserror::Error;

/// Errors produced by the clustering toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty input")]
    EmptyInput,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("n = {n} exceeds the full-matrix guard of {guard}; pass an explicit override to proceed")]
    GuardExceeded { n: usize, guard: usize },

    #[error("factorization breakdown at step {step}: residual {value:e}")]
    Breakdown { step: usize, value: f64 },

    #[error("Cholesky factorization failed even with jitter {jitter:e}")]
    CholeskyFailed { jitter: f64 },

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
