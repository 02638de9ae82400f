//! Vector-Jacobian products for the reweighting functions, used to
//! backpropagate through attention and to train the modulator parameters.

use crate::dispatch::ReweightSpec;
use crate::error::{Error, Result};
use crate::functions::{entmax15_threshold, ev_softmax_support, softmax_raw};
use crate::modulator::{modulate, ModulatorParams, OrderParams};
use crate::types::Scores;

/// Gradients of a scalar objective with respect to the modulator parameters,
/// shaped like [`ModulatorParams`].
pub type ModulatorGrads = ModulatorParams;

/// Result of a vector-Jacobian product: cotangent pulled back to the input,
/// and, for MultiMax, to the modulator parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Vjp {
    pub grad_x: Vec<f64>,
    pub grad_params: Option<ModulatorGrads>,
}

/// Pull the softmax Jacobian (at unit temperature) back through a cotangent,
/// given the output probabilities: g_i = p_i * (v_i - <p, v>).
fn softmax_pullback(p: &[f64], v: &[f64]) -> Vec<f64> {
    let dot: f64 = p.iter().zip(v).map(|(pi, vi)| pi * vi).sum();
    p.iter().zip(v).map(|(pi, vi)| pi * (vi - dot)).collect()
}

/// J_phi^T . cotangent for the function selected by `spec`.
///
/// The sparse functions (sparsemax, entmax15, ev-softmax) use their
/// support-restricted Jacobians: gradient flows only through nonzero outputs,
/// and the ev-softmax survivor set is treated as constant.
pub fn vjp(spec: &ReweightSpec, x: &Scores, cotangent: &Scores) -> Result<Vjp> {
    let z = x.as_slice();
    let v = cotangent.as_slice();
    if z.len() != v.len() {
        return Err(Error::InvalidInput(format!(
            "cotangent length {} does not match input length {}",
            v.len(),
            z.len()
        )));
    }
    match spec {
        ReweightSpec::Softmax(tau) => {
            let p = softmax_raw(z, tau.tau());
            let g = softmax_pullback(&p, v);
            let inv = tau.inverse();
            Ok(Vjp {
                grad_x: g.into_iter().map(|gi| gi * inv).collect(),
                grad_params: None,
            })
        }
        ReweightSpec::Multimax(params) => {
            let modulated = modulate(x, params)?;
            let p = softmax_raw(modulated.as_slice(), 1.0);
            // Gradient with respect to sigma(x).
            let g_sigma = softmax_pullback(&p, v);
            let grad_x: Vec<f64> = z
                .iter()
                .zip(&g_sigma)
                .map(|(&xi, &gi)| gi * params.derivative_scalar(xi))
                .collect();
            let mut grads: Vec<OrderParams> = params
                .orders()
                .iter()
                .map(|_| OrderParams {
                    b: 0.0,
                    d: 0.0,
                    t_b: 0.0,
                    t_d: 0.0,
                })
                .collect();
            for (&xi, &gi) in z.iter().zip(&g_sigma) {
                for (grad, (dt_b, dt_d, db, dd)) in
                    grads.iter_mut().zip(params.param_partials_scalar(xi))
                {
                    grad.t_b += gi * dt_b;
                    grad.t_d += gi * dt_d;
                    grad.b += gi * db;
                    grad.d += gi * dd;
                }
            }
            Ok(Vjp {
                grad_x,
                grad_params: Some(ModulatorParams::new(grads)?),
            })
        }
        ReweightSpec::Sparsemax => {
            let p = crate::functions::sparsemax(x)?;
            let support: Vec<usize> = (0..z.len()).filter(|&i| p.as_slice()[i] > 0.0).collect();
            let mean_v: f64 = support.iter().map(|&i| v[i]).sum::<f64>() / support.len() as f64;
            let mut grad = vec![0.0; z.len()];
            for &i in &support {
                grad[i] = v[i] - mean_v;
            }
            Ok(Vjp {
                grad_x: grad,
                grad_params: None,
            })
        }
        ReweightSpec::Entmax15 => {
            let tau = entmax15_threshold(z)?;
            let u: Vec<f64> = z.iter().map(|&xi| (xi / 2.0 - tau).max(0.0)).collect();
            let u_sum: f64 = u.iter().sum();
            let dot: f64 = u.iter().zip(v).map(|(ui, vi)| ui * vi).sum();
            let grad = u
                .iter()
                .zip(v)
                .map(|(&ui, &vi)| ui * (vi - dot / u_sum))
                .collect();
            Ok(Vjp {
                grad_x: grad,
                grad_params: None,
            })
        }
        ReweightSpec::EvSoftmax => {
            let support = ev_softmax_support(z);
            let p = crate::functions::ev_softmax(x)?;
            let ps = p.as_slice();
            let dot: f64 = (0..z.len())
                .filter(|&i| support[i])
                .map(|i| ps[i] * v[i])
                .sum();
            let grad = (0..z.len())
                .map(|i| {
                    if support[i] {
                        ps[i] * (v[i] - dot)
                    } else {
                        0.0
                    }
                })
                .collect();
            Ok(Vjp {
                grad_x: grad,
                grad_params: None,
            })
        }
    }
}
