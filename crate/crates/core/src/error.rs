//! Crate-wide error type.

use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid mode: {0}")]
    InvalidMode(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// The iteration produced a non-finite state. Carries the last finite
    /// value of the monitored error so partial progress is reportable.
    #[error("divergence: non-finite state (last finite error {last_error:e})")]
    Divergence { last_error: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation failed for {target}: {detail}")]
    Validation { target: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::InvalidDimension(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
