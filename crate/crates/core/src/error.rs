use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} outside mirrored range [-2, {}] of axis {axis}", .extent + 1)]
    OutOfBounds {
        axis: usize,
        index: isize,
        extent: usize,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time step {tau} exceeds stability limit {limit}")]
    Unstable { tau: f64, limit: f64 },

    #[error("quadrature did not converge: {0}")]
    Accuracy(String),

    #[error("experiment failed: {0}")]
    Experiment(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(offset: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: msg.into(),
        }
    }
}
