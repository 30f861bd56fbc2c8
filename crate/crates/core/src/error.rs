use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of a model function.
    #[error("domain error in {func}: {msg}")]
    Domain { func: &'static str, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("failed to parse {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("candidate graph contains a cycle through node {0}")]
    Cycle(u32),

    #[error("unknown node id {0}")]
    UnknownNode(u32),

    #[error("no packets were generated; delivery ratio is undefined")]
    NoTraffic,

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("unknown sweep parameter `{0}`")]
    SweepKey(String),

    #[error("refusing to emit an empty result table")]
    EmptyTable,

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            func,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
