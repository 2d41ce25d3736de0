use std::path::PathBuf;

use thiserror::Error;

pub type AppResult<T> = Result<T, AppError>;

#[derive(Debug, Error)]
pub enum AppError {
    /// Bad command-line or config values; exits with status 2.
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad header: expected `{expected}`, found `{found}`")]
    Header { path: PathBuf, expected: String, found: String },

    #[error("{path}: row {row}, column `{column}`: cannot parse `{value}`")]
    Parse { path: PathBuf, row: u64, column: String, value: String },

    #[error("{path}: row {row}: timestamp {timestamp} does not increase on the previous row")]
    Ordering { path: PathBuf, row: u64, timestamp: i64 },

    #[error("{path}: row {row}: {message}")]
    Validation { path: PathBuf, row: u64, message: String },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] fxcast_core::Error),
}

impl AppError {
    /// 2 for argument errors, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }
}
