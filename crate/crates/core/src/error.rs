use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size mismatch: expected side {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("non-finite value at index {index} ({context})")]
    NonFinite { index: usize, context: &'static str },

    #[error("value {value} at index {index} outside [0, 1] ({context})")]
    OutOfRange {
        index: usize,
        value: f64,
        context: &'static str,
    },

    #[error("solver diverged at iteration {iteration}: residual {residual:e}")]
    Diverged { iteration: usize, residual: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error("length error: expected {expected} bytes, got {actual}")]
    Length { expected: usize, actual: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
