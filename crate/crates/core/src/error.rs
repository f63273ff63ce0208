use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("degenerate potential: {0}")]
    DegeneratePotential(String),

    #[error("level {requested} out of range: potential holds {capacity} bound levels")]
    Range { requested: usize, capacity: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("cache entry corrupt: {0}")]
    CacheCorrupt(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
