//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration values.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Vector/matrix shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// NaN or other numeric breakdown detected.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// Configuration file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
