//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("undefined branch: {0}")]
    UndefinedBranch(String),

    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("invalid problem spec: {0}")]
    InvalidSpec(String),

    #[error("valley not found: no negative energy on the t grid (widen or refine it)")]
    ValleyNotFound,

    #[error("descent stage failed at eps={eps}: {reason}")]
    StageFailure { eps: f64, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
