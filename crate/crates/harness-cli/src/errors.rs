//! CLI error classification. Exit codes: 0 success, 1 verification failure,
//! 2 usage or parse error, 3 numerical or training failure.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Verification(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<reweight_core::Error> for CliError {
    fn from(e: reweight_core::Error) -> Self {
        match e {
            reweight_core::Error::NumericalFailure(m) => CliError::Numerical(m),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<tradeoff_metrics::Error> for CliError {
    fn from(e: tradeoff_metrics::Error) -> Self {
        match e {
            tradeoff_metrics::Error::Core(c) => c.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<nano_attention::Error> for CliError {
    fn from(e: nano_attention::Error) -> Self {
        match e {
            nano_attention::Error::TrainingDiverged { .. } => CliError::Numerical(e.to_string()),
            nano_attention::Error::Core(c) => c.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
