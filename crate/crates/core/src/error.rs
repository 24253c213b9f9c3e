use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed indices or shapes that do not fit the instance.
    #[error("usage error: {0}")]
    Usage(String),

    /// An instance violates one of the model invariants.
    #[error("invalid instance: {0}")]
    Validation(String),

    /// Non-finite input, failed factorization, LP breakdown.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// An internal guarantee did not hold (e.g. an LP that cannot be infeasible was).
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Experiment configuration rejected; `path` points at the offending key.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 2 for configuration problems,
    /// 3 for numeric or invariant failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Usage(_) => 2,
            Error::Validation(_) | Error::Numeric(_) | Error::Invariant(_) => 3,
            Error::Io { .. } | Error::Json { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
