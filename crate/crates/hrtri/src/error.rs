use std::path::PathBuf;

/// Errors surfaced by the command-line layer.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] hrtri_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Ingest { path: PathBuf, reason: String, rows: Vec<u64> },
    #[error("usage: {0}")]
    Usage(String),
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("output failed: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Exit status: every error here is a usage or domain problem.
    pub fn exit_code(&self) -> u8 {
        2
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
