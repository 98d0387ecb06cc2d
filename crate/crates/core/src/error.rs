//! Error type shared by all solver and I/O operations.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TvError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("window out of range: {0}")]
    WindowOutOfRange(String),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("infeasible dual field: {0}")]
    InfeasibleDual(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, TvError>;
