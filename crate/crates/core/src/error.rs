use thiserror::Error;

/// Errors produced by the beamforming library and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("SVD failed to converge within {iterations} iterations")]
    SvdNoConvergence { iterations: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed channel dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for failures of the numerical routines (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::SvdNoConvergence { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
