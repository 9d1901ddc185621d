use thiserror::Error;

/// Errors raised by the estimators, eigensystem catalog and experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("basis index {0} is out of range (indices start at 1)")]
    InvalidIndex(usize),

    #[error("basis index {index} exceeds the enumerated catalog of {capacity} functions")]
    CatalogExhausted { index: usize, capacity: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate pivot {pivot:e} (tolerance {tol:e})")]
    DegeneratePivot { pivot: f64, tol: f64 },

    #[error("initialization failed: {0}")]
    InitializationFailed(String),

    #[error("estimator is not initialized yet ({seen} of {needed} warm-up observations)")]
    NotReady { seen: usize, needed: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
