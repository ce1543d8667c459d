use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: missing column {column:?}")]
    MissingColumn { column: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column {column:?}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index {index} out of range for {len} columns")]
    Index { index: usize, len: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numeric error in {context}: {message}")]
    Numeric { context: String, message: String },

    #[error("training diverged at update {update}: loss = {loss}")]
    Diverged { update: usize, loss: f64 },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn numeric(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Numeric {
            context: context.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
