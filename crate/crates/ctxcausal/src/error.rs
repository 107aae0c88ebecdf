use std::path::PathBuf;

use thiserror::Error;

/// Failures of the command-line frontend and file formats.
#[derive(Debug, Error)]
pub enum AppError {
    /// Bad flags or parameter values.
    #[error("{0}")]
    Usage(String),
    /// A file could not be read or written.
    #[error("{path}: {source}")]
    Io {
        /// Offending path.
        path: PathBuf,
        /// Underlying error.
        source: std::io::Error,
    },
    /// Malformed CSV.
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    /// Malformed JSON.
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    /// Invalid data or parameters rejected by the library.
    #[error(transparent)]
    Core(#[from] ctxcausal_core::Error),
    /// Discovery ran but no candidate could be tested.
    #[error("no testable candidates")]
    NoTestableCandidates,
}

impl AppError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 1 usage, 2 data, 3 nothing testable.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Core(ctxcausal_core::Error::InvalidParameter(_)) => 1,
            Self::NoTestableCandidates => 3,
            _ => 2,
        }
    }
}

/// Result alias of this crate.
pub type Result<T, E = AppError> = std::result::Result<T, E>;
