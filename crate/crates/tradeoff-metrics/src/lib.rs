//! Multi-modality and sparsity metrics for reweighting functions, sweeps
//! over their temperature-like knobs, attention diagnostics (rollout,
//! rollout discrepancy, token similarity, score histograms), and the
//! randomized verification suites for the metric inequalities.

pub mod attention;
pub mod error;
pub mod histogram;
pub mod metrics;
pub mod pareto;
pub mod props;

pub use attention::{
    attention_rollout, patch_similarity, rollout_discrepancy, AttentionStack, AttnMatrix,
    LayerAttention,
};
pub use error::{Error, Result};
pub use histogram::{default_log_edges, score_histogram, Histogram};
pub use metrics::{
    default_reference, mean_abs, multimodality, sparsity, MetricConfig, MetricValue,
};
pub use pareto::{pareto_sweep, ParetoPoint};
pub use props::{run_all, PropCheck, PropReport, SLACK};
