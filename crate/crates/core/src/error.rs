use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("duplicate record key `{0}`")]
    DuplicateKey(String),

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid record `{key}`: {message}")]
    InvalidRecord { key: String, message: String },

    #[error("name `{0}` is empty after normalization")]
    EmptyName(String),

    #[error("no author in the corpus has the name variate `{0}`")]
    EmptyBlock(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("class {class} has no training samples")]
    EmptyClass { class: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("model does not match block: {0}")]
    ModelMismatch(String),

    #[error("{0}")]
    Empty(String),

    #[error("length mismatch: {0} truths vs {1} predictions")]
    LengthMismatch(usize, usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
