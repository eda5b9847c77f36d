use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the selection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("node {node} out of range for {n_nodes} nodes")]
    NodeOutOfRange { node: u64, n_nodes: usize },

    #[error("negative attribute value {0}")]
    NegativeValue(f64),

    #[error("requested {requested} non-edges but only {available} exist")]
    NonEdgesExhausted { requested: usize, available: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("expected stage input {0} does not exist")]
    MissingInput(PathBuf),

    #[error("config {key} failed: {source}")]
    InConfig {
        key: String,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
