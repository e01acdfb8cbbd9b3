use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("arity {0} exceeds the exhaustive-table limit")]
    ArityTooLarge(usize),

    #[error("variable label {label} out of range for arity {arity}")]
    LabelOutOfRange { label: usize, arity: usize },

    #[error("variable label {0} appears more than once in the decimation order")]
    DuplicateLabel(usize),

    #[error("cannot decimate a function of arity 0")]
    NoVariables,

    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("{0} is not an odd prime")]
    NotOddPrime(u32),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("exhaustive search needs 2^{monomials} candidates, above the 2^{cap} limit")]
    Capacity { monomials: usize, cap: usize },

    #[error("bad file format: {0}")]
    Format(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
