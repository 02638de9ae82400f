//! End-to-end gradient checking: analytic backprop against central finite
//! differences of the batch loss, for every parameter group including the
//! modulator parameters.

use crate::error::Result;
use crate::model::{Model, ToyModelConfig};
use crate::task::Sample;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub name: String,
    pub max_rel_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub groups: Vec<GroupReport>,
}

impl GradCheckReport {
    pub fn all_pass(&self) -> bool {
        self.groups.iter().all(|g| g.pass)
    }

    pub fn worst(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| g.max_rel_err)
            .fold(0.0, f64::max)
    }
}

fn batch_loss(model: &Model, batch: &[Sample]) -> Result<f64> {
    let mut loss = 0.0;
    for sample in batch {
        let cache = model.forward_cached(&sample.tokens)?;
        loss += Model::loss(&cache, sample.label);
    }
    Ok(loss / batch.len() as f64)
}

/// Compare analytic gradients of the mean batch loss against central finite
/// differences with step `h`, reporting the max relative error per parameter
/// group. A group passes when its error is strictly below `tol`, so tol = 0
/// flags everything.
///
/// Relative error is measured against the larger of the two values with a
/// 1e-4 floor: below that both routes are reporting a numerically zero
/// gradient and the ratio would be round-off noise.
pub fn grad_check(
    cfg: &ToyModelConfig,
    batch: &[Sample],
    h: f64,
    tol: f64,
) -> Result<GradCheckReport> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let model = Model::init(cfg)?;
    grad_check_model(&model, batch, h, tol)
}

/// Same check against an existing model (e.g. mid-training parameters).
pub fn grad_check_model(
    model: &Model,
    batch: &[Sample],
    h: f64,
    tol: f64,
) -> Result<GradCheckReport> {
    let mut grads = model.zeros_like();
    let weight = 1.0 / batch.len() as f64;
    for sample in batch {
        let cache = model.forward_cached(&sample.tokens)?;
        model.backward(&cache, &sample.tokens, sample.label, weight, &mut grads)?;
    }
    let (analytic, spans) = grads.flatten();
    let (theta, _) = model.flatten();

    let mut scratch = model.clone();
    let mut groups = Vec::with_capacity(spans.len());
    for (name, range) in spans {
        let mut max_err: f64 = 0.0;
        for idx in range {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[idx] += h;
            minus[idx] -= h;
            scratch.unflatten(&plus);
            let lp = batch_loss(&scratch, batch)?;
            scratch.unflatten(&minus);
            let lm = batch_loss(&scratch, batch)?;
            let fd = (lp - lm) / (2.0 * h);
            let a = analytic[idx];
            let err = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-4);
            if err > max_err {
                max_err = err;
            }
        }
        groups.push(GroupReport {
            pass: max_err < tol,
            name,
            max_rel_err: max_err,
        });
    }
    Ok(GradCheckReport { groups })
}
