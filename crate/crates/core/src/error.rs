use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("parameters outside every regime: {0}")]
    OutOfRegime(String),

    #[error("oracle not applicable: {0}")]
    UnsupportedOracle(String),

    #[error("degenerate form: {0}")]
    DegenerateForm(String),

    #[error("invalid fit input: {0}")]
    InvalidFit(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
