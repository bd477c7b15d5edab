use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(f64),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("parameter out of range: {0}")]
    InvalidParameter(String),

    #[error("precondition {condition} fails: {detail}")]
    PreconditionFailed {
        condition: &'static str,
        detail: String,
    },

    #[error("covariance matrix is not positive semidefinite (pivot {pivot} at column {column})")]
    NotPsd { column: usize, pivot: f64 },

    #[error("degenerate tuning: {0}")]
    DegenerateTuning(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {detail}")]
    Parse { path: String, detail: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(path: &std::path::Path, detail: impl Into<String>) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            detail: detail.into(),
        }
    }
}
