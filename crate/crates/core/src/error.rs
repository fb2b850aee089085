use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its valid range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Input data (vectors, matrices) contains values the operation cannot accept.
    #[error("input error: {0}")]
    Input(String),

    /// A structural assumption on the network (connectivity, stochasticity) does not hold.
    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// A run produced a non-finite loss.
    #[error("diverged at iteration {iter}: {detail}")]
    Diverged { iter: usize, detail: String },

    #[error("parse error at row {row}: {detail}")]
    Parse { row: usize, detail: String },

    #[error("config error in `{key}`: {detail}")]
    Config { key: String, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
