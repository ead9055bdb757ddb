use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {msg}")]
    Load { path: String, line: usize, msg: String },

    #[error("{0}: no rows")]
    NoRows(String),

    #[error("schema: {0}")]
    Schema(String),

    #[error("config: {0}")]
    Config(String),

    #[error("fold: {0}")]
    Fold(String),

    #[error("cannot train on an empty view")]
    EmptyView,

    #[error("metrics: {0}")]
    Metrics(String),

    #[error("malformed document: {0}")]
    Format(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate merge at step {step}: no compatible rule pairs (surviving trees {surviving:?})")]
    DegenerateMerge { step: usize, surviving: Vec<usize> },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by bad user input (config, schema, manifest).
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Schema(_))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
