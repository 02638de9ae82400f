use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("training diverged at step {step}: loss {loss}")]
    TrainingDiverged { step: usize, loss: f64 },
    #[error(transparent)]
    Core(#[from] reweight_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
