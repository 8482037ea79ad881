use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParam { key: String, reason: String },

    #[error("config syntax error on line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("bodies overlap: distance {distance} <= radius {radius}")]
    Overlap { distance: f64, radius: f64 },

    #[error("apparent size {0} outside (0, pi)")]
    InvalidApparentSize(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite gradient for neighbor {neighbor}: {state}")]
    NonFiniteGradient { neighbor: usize, state: String },

    #[error("numerical failure at step {step}, agent {agent}: {message}")]
    Numerical { step: usize, agent: usize, message: String },

    #[error("malformed trajectory file at row {row}: {message}")]
    TrajectoryParse { row: usize, message: String },

    #[error("too many failed evaluations: {failed} of {total}")]
    TooManyFailures { failed: usize, total: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(key: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Coarse failure category, used for process exit codes and FFI error codes.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidParam { .. } | Error::ConfigSyntax { .. } => ErrorCategory::Config,
            Error::Io { .. } | Error::TrajectoryParse { .. } | Error::Json(_) => ErrorCategory::Io,
            Error::DimensionMismatch { .. } => ErrorCategory::Usage,
            _ => ErrorCategory::Numerical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Io,
    Usage,
    Numerical,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Usage => 2,
            ErrorCategory::Config => 3,
            ErrorCategory::Io => 4,
            ErrorCategory::Numerical => 5,
        }
    }
}
