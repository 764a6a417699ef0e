use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid metric: {0}")]
    Metric(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("frame is not orthonormal: {0}")]
    Frame(String),

    #[error("unsupported dimension {dim}: {reason}")]
    UnsupportedDimension { dim: usize, reason: String },

    #[error("point outside chart domain: {0}")]
    Domain(String),

    #[error("degenerate embedding differential: {0}")]
    Rank(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("internal consistency violated: {0}")]
    InternalConsistency(String),

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
