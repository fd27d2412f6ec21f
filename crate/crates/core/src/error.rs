use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the engine and its file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("unsafe query: {0}")]
    UnsafeQuery(String),

    #[error("restricted recognition requires a specification without inequality atoms in its denial constraints")]
    UnsupportedSetting,

    #[error("criterion {0} is not supported by the restricted recognizer")]
    UnsupportedCriterion(String),

    #[error("search budget of {0} explored candidates exhausted; result is inconclusive")]
    Inconclusive(usize),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
