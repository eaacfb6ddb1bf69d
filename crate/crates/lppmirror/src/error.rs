use std::path::{Path, PathBuf};

/// Errors from file formats, configuration and experiment drivers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] lppmirror_core::Error),

    #[error("{path}: {error}")]
    Io { path: PathBuf, error: std::io::Error },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("configuration: {0}")]
    Config(String),

    #[error("{failed} of {total} replicates failed (limit {limit:.0}%): {first}")]
    TooManyFailures { failed: usize, total: usize, limit: f64, first: String },

    #[error("checkpoint {path} does not match this run: {reason}")]
    Checkpoint { path: PathBuf, reason: String },
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), error: source }
    }

    pub fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        Self::Parse { path: path.to_path_buf(), line, message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
