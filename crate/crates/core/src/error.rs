use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("vertex {index} out of range for {vertex_count} vertices")]
    VertexOutOfRange { index: u64, vertex_count: u64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("malformed edge list: {0}")]
    MalformedEdges(String),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("no convergence within {cap} {what}")]
    NoConvergence { what: &'static str, cap: u64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by caller-supplied values rather than by the
    /// environment or by a computation running out of budget.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::VertexOutOfRange { .. }
                | Error::DimensionMismatch { .. }
                | Error::MalformedEdges(_)
                | Error::Disconnected
                | Error::InsufficientData(_)
                | Error::Parse { .. }
                | Error::Config(_)
        )
    }
}
