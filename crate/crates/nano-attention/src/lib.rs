//! A self-contained toy attention classifier for studying reweighting
//! functions: synthetic multi-token retrieval data, a minimal pre-norm
//! transformer with a pluggable reweighting function and trainable modulator
//! parameters, deterministic gradient-descent training, and an end-to-end
//! finite-difference gradient checker.

pub mod attention;
pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod mat;
pub mod model;
pub mod task;
pub mod train;

pub use attention::{attention_forward, reweight_rows};
pub use checkpoint::{Checkpoint, NamedTensor};
pub use error::{Error, Result};
pub use gradcheck::{grad_check, grad_check_model, GradCheckReport, GroupReport};
pub use mat::Mat;
pub use model::{Model, SampleDiagnostics, ToyModelConfig};
pub use task::{make_needle_task, NeedleTask, Sample};
pub use train::{train, train_model, AttnSummaryAccum, LayerAttnSummary, StepStats, TrainLog};
