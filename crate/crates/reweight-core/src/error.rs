use thiserror::Error;

/// Errors produced by the reweighting functions and their gradients.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid temperature: {0} (must be finite and > 0)")]
    InvalidTemperature(f64),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
