use std::path::PathBuf;

use bpg::BpgError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Syntax and type errors; the message carries the line and column.
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid instance file: {0}")]
    Schema(String),

    #[error("invalid run specification: {0}")]
    Spec(String),

    #[error(transparent)]
    Core(#[from] BpgError),

    #[error("worker pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
