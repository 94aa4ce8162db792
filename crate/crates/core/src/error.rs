use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sieving up to {limit} needs about {needed} bytes, over the memory budget of {budget} bytes")]
    Resource { limit: u64, needed: u64, budget: u64 },

    #[error("{what} = {value} is outside the available range (max {max}); build a larger sieve plan")]
    Range { what: &'static str, value: u64, max: u64 },

    #[error("{function} is undefined at {value}")]
    Domain { function: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("skewes_log10 overflows for alpha = {0}")]
    Overflow(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("singular least-squares design: {0}")]
    SingularFit(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
