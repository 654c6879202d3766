use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("configuration invalid:\n  {}", .0.join("\n  "))]
    ConfigList(Vec<String>),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("insufficient history: {available} months available, {required} required")]
    InsufficientHistory { available: usize, required: usize },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("cache corrupted at {path}: {message}")]
    CacheCorrupt { path: PathBuf, message: String },

    #[error("transport error: {0}")]
    Transport(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
