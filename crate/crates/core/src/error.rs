use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violates a structural invariant (dimensions, ids, empty lists).
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown built-in strategy `{0}`")]
    UnknownStrategy(String),

    #[error(transparent)]
    Strategy(#[from] StrategyFault),

    #[error("expression rejected: {0}")]
    Expr(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("client: {0}")]
    Client(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// A strategy produced a non-finite score. Callers treat the strategy as buggy
/// for the instance at hand rather than aborting.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("strategy `{strategy}` produced a non-finite {target} score at index {index}")]
pub struct StrategyFault {
    pub strategy: String,
    pub target: &'static str,
    pub index: usize,
}
