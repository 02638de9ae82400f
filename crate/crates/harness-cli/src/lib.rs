//! Command-line surface for the reweighting-function toolkit: pointwise
//! evaluation, modulator curves, simplex trajectories, metric sweeps,
//! randomized verification suites, toy training, and attention statistics
//! export. The binary is `multimax`.

pub mod bundles;
pub mod commands;
pub mod errors;
pub mod grid;
pub mod jsonfmt;

pub use bundles::ParamBundle;
pub use errors::{CliError, CliResult};
