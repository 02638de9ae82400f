//! Histogram and cumulative distribution of attention probabilities.

use crate::error::{Error, Result};

/// Counts per bin plus running cumulative fractions. Bin i covers
/// [edges[i], edges[i+1]), with the final bin closed on the right.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub cumulative: Vec<f64>,
}

/// Default edges for attention scores: an underflow bin for exact zeros,
/// then 50 log-spaced bins over [1e-8, 1]. Attention histograms live on a
/// log-log scale, so the bins do too.
pub fn default_log_edges() -> Vec<f64> {
    let mut edges = vec![0.0];
    let lo: f64 = 1e-8;
    let hi: f64 = 1.0;
    let bins = 50;
    for i in 0..=bins {
        let t = i as f64 / bins as f64;
        edges.push(lo * (hi / lo).powf(t));
    }
    let last = edges.len() - 1;
    edges[last] = 1.0;
    edges
}

/// Bin `scores` (attention probabilities in [0, 1]) by `edges`.
///
/// Edges must be strictly increasing and cover [0, 1] so the counts
/// partition the data. The cumulative fractions are nondecreasing and end at
/// 1 for nonempty data; an empty score list yields all-zero counts and
/// fractions.
pub fn score_histogram(scores: &[f64], edges: &[f64]) -> Result<Histogram> {
    if edges.len() < 2 {
        return Err(Error::InvalidInput("need at least two bin edges".into()));
    }
    if edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput(
            "bin edges must be strictly increasing".into(),
        ));
    }
    if edges[0] > 0.0 || *edges.last().unwrap() < 1.0 {
        return Err(Error::InvalidInput("bin edges must cover [0, 1]".into()));
    }
    let bins = edges.len() - 1;
    let mut counts = vec![0u64; bins];
    for &v in scores {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidInput(format!("score {v} outside [0, 1]")));
        }
        // Last bin is inclusive on the right.
        let mut idx = match edges.binary_search_by(|e| e.partial_cmp(&v).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        if idx >= bins {
            idx = bins - 1;
        }
        counts[idx] += 1;
    }
    let total: u64 = counts.iter().sum();
    let mut cumulative = Vec::with_capacity(bins);
    let mut running = 0u64;
    for &c in &counts {
        running += c;
        cumulative.push(if total == 0 {
            0.0
        } else {
            running as f64 / total as f64
        });
    }
    Ok(Histogram {
        edges: edges.to_vec(),
        counts,
        cumulative,
    })
}
