//! Standalone scaled dot-product attention with a pluggable reweighting
//! function.

use crate::error::{Error, Result};
use crate::mat::Mat;
use reweight_core::{reweight, ReweightSpec, Scores};

/// Apply the reweighting function to every row of a score matrix. A single
/// column (one key) short-circuits to probability one.
pub fn reweight_rows(scores: &Mat, spec: &ReweightSpec) -> Result<Mat> {
    let mut out = Mat::zeros(scores.rows, scores.cols);
    for r in 0..scores.rows {
        if scores.cols == 1 {
            *out.at_mut(r, 0) = 1.0;
            continue;
        }
        let row = Scores::from_slice(scores.row(r))?;
        let p = reweight(spec, &row)?;
        out.row_mut(r).copy_from_slice(p.as_slice());
    }
    Ok(out)
}

/// probs row r = reweight(q_r . k^T / sqrt(d)); output = probs . v.
/// Returns (output, probs).
pub fn attention_forward(q: &Mat, k: &Mat, v: &Mat, spec: &ReweightSpec) -> Result<(Mat, Mat)> {
    if q.cols != k.cols {
        return Err(Error::InvalidInput(format!(
            "query dim {} does not match key dim {}",
            q.cols, k.cols
        )));
    }
    if k.rows != v.rows {
        return Err(Error::InvalidInput(format!(
            "key count {} does not match value count {}",
            k.rows, v.rows
        )));
    }
    if q.cols == 0 || q.rows == 0 || k.rows == 0 {
        return Err(Error::InvalidInput("empty attention operand".into()));
    }
    let scale = 1.0 / (q.cols as f64).sqrt();
    let mut scores = q.matmul_bt(k);
    for s in &mut scores.data {
        *s *= scale;
    }
    let probs = reweight_rows(&scores, spec)?;
    let output = probs.matmul(v);
    Ok((output, probs))
}
