use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside [0, 1]")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("rejected process spec: {0}")]
    InvalidProcess(String),

    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("data digest mismatch: log has {log}, oracle data has {oracle}")]
    DigestMismatch { log: String, oracle: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
