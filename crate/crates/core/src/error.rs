use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid interval [{a},{b}]: lower bound exceeds upper bound")]
    InvalidInterval { a: usize, b: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("step {step} outside schedule [0, {total}]")]
    StepOutOfRange { step: usize, total: usize },

    #[error("calibration set is empty")]
    EmptyCalibration,

    #[error("too many predicates for subset enumeration: {0} (max 12)")]
    TooManyPredicates(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
