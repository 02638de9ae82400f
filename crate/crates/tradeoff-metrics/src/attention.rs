//! Attention diagnostics: rollout across layers, per-layer rollout
//! discrepancy, and pairwise token similarity.

use crate::error::{Error, Result};
use reweight_core::SIMPLEX_SUM_TOL;

/// Square row-stochastic matrix, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct AttnMatrix {
    pub size: usize,
    pub rows: Vec<Vec<f64>>,
}

impl AttnMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::InvalidInput("empty attention matrix".into()));
        }
        for row in &rows {
            if row.len() != size {
                return Err(Error::InvalidInput(format!(
                    "attention matrix must be square: row of length {} in a {}-row matrix",
                    row.len(),
                    size
                )));
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) || (sum - 1.0).abs() > SIMPLEX_SUM_TOL
            {
                return Err(Error::InvalidInput(format!(
                    "attention row is not on the simplex (sum {sum})"
                )));
            }
        }
        Ok(AttnMatrix { size, rows })
    }

    pub fn identity(size: usize) -> Self {
        let rows = (0..size)
            .map(|i| (0..size).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        AttnMatrix { size, rows }
    }

    pub fn uniform(size: usize) -> Self {
        AttnMatrix {
            size,
            rows: vec![vec![1.0 / size as f64; size]; size],
        }
    }

    /// self * other (matrix product; row-stochasticity is closed under it).
    pub fn matmul(&self, other: &AttnMatrix) -> AttnMatrix {
        let n = self.size;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                let a = self.rows[i][k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    rows[i][j] += a * other.rows[k][j];
                }
            }
        }
        AttnMatrix { size: n, rows }
    }
}

/// Attention matrices of one layer, one per head.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerAttention {
    pub heads: Vec<AttnMatrix>,
}

/// Per-layer, per-head attention matrices with a shared token count.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionStack {
    layers: Vec<LayerAttention>,
    size: usize,
}

impl AttentionStack {
    pub fn new(layers: Vec<LayerAttention>) -> Result<Self> {
        let size = layers
            .first()
            .and_then(|l| l.heads.first())
            .map(|h| h.size)
            .ok_or_else(|| Error::InvalidInput("empty attention stack".into()))?;
        for layer in &layers {
            if layer.heads.is_empty() {
                return Err(Error::InvalidInput("layer without heads".into()));
            }
            for head in &layer.heads {
                if head.size != size {
                    return Err(Error::InvalidInput(format!(
                        "inconsistent token counts in stack: {} vs {size}",
                        head.size
                    )));
                }
            }
        }
        Ok(AttentionStack { layers, size })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn tokens(&self) -> usize {
        self.size
    }

    pub fn layers(&self) -> &[LayerAttention] {
        &self.layers
    }

    /// Head-averaged attention of one layer.
    pub fn head_average(&self, layer: usize) -> AttnMatrix {
        let heads = &self.layers[layer].heads;
        let n = self.size;
        let mut rows = vec![vec![0.0; n]; n];
        for head in heads {
            for (acc, row) in rows.iter_mut().zip(&head.rows) {
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += v / heads.len() as f64;
                }
            }
        }
        AttnMatrix { size: n, rows }
    }
}

/// Sequential product of head-averaged layer attentions, deepest layer
/// leftmost. With `identity_augment` each factor becomes 0.5 (A + I) before
/// multiplying; the plain product is the default elsewhere.
pub fn attention_rollout(stack: &AttentionStack, identity_augment: bool) -> AttnMatrix {
    let mut rollout: Option<AttnMatrix> = None;
    for layer in 0..stack.depth() {
        let mut avg = stack.head_average(layer);
        if identity_augment {
            for (i, row) in avg.rows.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = 0.5 * (*v + if i == j { 1.0 } else { 0.0 });
                }
            }
        }
        rollout = Some(match rollout {
            None => avg,
            Some(r) => avg.matmul(&r),
        });
    }
    rollout.expect("stack validated nonempty")
}

/// For each depth, the mean absolute elementwise difference between the
/// rollout up to that layer and the layer's own head-averaged attention.
pub fn rollout_discrepancy(stack: &AttentionStack) -> Vec<f64> {
    let n = stack.tokens();
    let mut out = Vec::with_capacity(stack.depth());
    let mut rollout: Option<AttnMatrix> = None;
    for layer in 0..stack.depth() {
        let avg = stack.head_average(layer);
        let r = match rollout {
            None => avg.clone(),
            Some(prev) => avg.matmul(&prev),
        };
        let mut diff = 0.0;
        for (rr, ar) in r.rows.iter().zip(&avg.rows) {
            for (a, b) in rr.iter().zip(ar) {
                diff += (a - b).abs();
            }
        }
        out.push(diff / (n * n) as f64);
        rollout = Some(r);
    }
    out
}

/// Mean cosine similarity over all unordered pairs of token vectors
/// (rows of a T x D matrix).
pub fn patch_similarity(tokens: &[Vec<f64>]) -> Result<f64> {
    let t = tokens.len();
    if t < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 token vectors, got {t}"
        )));
    }
    let dim = tokens[0].len();
    let mut norms = Vec::with_capacity(t);
    for row in tokens {
        if row.len() != dim {
            return Err(Error::InvalidInput("ragged token matrix".into()));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite token entry".into()));
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidInput("zero-norm token vector".into()));
        }
        norms.push(norm);
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..t {
        for j in (i + 1)..t {
            let dot: f64 = tokens[i].iter().zip(&tokens[j]).map(|(a, b)| a * b).sum();
            total += dot / (norms[i] * norms[j]);
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}
