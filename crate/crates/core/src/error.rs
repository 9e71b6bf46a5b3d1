use chrono::{DateTime, Utc};
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("invalid range: from {from} is after to {to}")]
    InvalidRange { from: DateTime<Utc>, to: DateTime<Utc> },

    #[error("no records for `{0}` in the requested range")]
    EmptyRange(String),

    #[error("insufficient history: {needed} steps ending at {at} are not covered by data")]
    InsufficientHistory { at: DateTime<Utc>, needed: usize },

    #[error("invalid step: {0}")]
    InvalidStep(String),

    #[error("catalog format error on line {line}: {message}")]
    CatalogFormat { line: usize, message: String },

    #[error("record parse error on line {line}: {message}")]
    RecordParse { line: usize, message: String },

    #[error("invalid simulator configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
