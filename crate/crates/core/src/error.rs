use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("domain error at eps0 = {eps0} ueV: {reason}")]
    Domain { eps0: f64, reason: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numeric range exceeded: {0}")]
    NumericRange(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("{path}:{line}: parse error: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("config key `{key}` violates bound: {bound}")]
    Invariant { key: String, bound: String },

    #[error("{path}: row {row}: {message}")]
    MalformedRow {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
