use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch at layer {layer}: {message}")]
    LayerShape { layer: usize, message: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("unbounded interval for {name}; tighter input bounds are required to derive a big-M constant")]
    UnboundedBigM { name: String },

    #[error("grid of {count} points exceeds the limit of {limit}; use a coarser step")]
    GridTooLarge { count: u128, limit: u128 },

    #[error("solver error: {0}")]
    Solver(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn layer(layer: usize, msg: impl Into<String>) -> Self {
        Error::LayerShape {
            layer,
            message: msg.into(),
        }
    }
}
