use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] snns_core::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },

    #[error("{path}: density-matrix invariant violated ({invariant}): {detail}")]
    InvariantViolation { path: String, invariant: &'static str, detail: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// A serde_json error located in `path`.
    pub fn parse(path: impl Into<String>, e: &serde_json::Error) -> Self {
        CliError::Parse { path: path.into(), line: e.line(), column: e.column(), message: e.to_string() }
    }
}
