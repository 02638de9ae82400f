//! Forward evaluation of the five reweighting functions.

use crate::error::{Error, Result};
use crate::modulator::{modulate, ModulatorParams};
use crate::types::{Scores, Simplex, Temperature};

/// Stable softmax over raw logits: exp((x - max)/tau) normalized.
pub(crate) fn softmax_raw(x: &[f64], tau: f64) -> Vec<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut e: Vec<f64> = x.iter().map(|&v| ((v - m) / tau).exp()).collect();
    let sum: f64 = e.iter().sum();
    for v in &mut e {
        *v /= sum;
    }
    e
}

/// Temperature softmax: result_i = exp(x_i/tau) / sum_k exp(x_k/tau).
///
/// A max-shift is applied before exponentiation; the result is exact because
/// softmax is shift invariant.
pub fn softmax(x: &Scores, tau: Temperature) -> Result<Simplex> {
    Simplex::new(softmax_raw(x.as_slice(), tau.tau()))
}

/// MultiMax: softmax at unit temperature of the modulated input.
///
/// The modulator is not shift equivariant, so the stabilizing max-shift is
/// applied to sigma(x), after modulation.
pub fn multimax(x: &Scores, params: &ModulatorParams) -> Result<Simplex> {
    let modulated = modulate(x, params)?;
    Simplex::new(softmax_raw(modulated.as_slice(), 1.0))
}

/// Euclidean projection of x onto the probability simplex, via the sorted
/// thresholding rule. Entries below the threshold come out exactly zero.
pub fn sparsemax(x: &Scores) -> Result<Simplex> {
    let z = x.as_slice();
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());

    // Largest k with 1 + k*z_(k) > cumulative sum of the top k entries.
    let mut cumsum = 0.0;
    let mut k_support = 0;
    let mut cumsum_support = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let k = (i + 1) as f64;
        if 1.0 + k * v > cumsum {
            k_support = i + 1;
            cumsum_support = cumsum;
        }
    }
    let theta = (cumsum_support - 1.0) / k_support as f64;
    Simplex::new(z.iter().map(|&v| (v - theta).max(0.0)).collect())
}

/// Maximum bisection steps for the entmax threshold search.
const ENTMAX_MAX_ITERS: u32 = 100;
/// The solve counts as converged once the bracket is narrower than this.
const ENTMAX_BRACKET_TOL: f64 = 1e-12;

/// Threshold tau* solving sum_i max(x_i/2 - tau, 0)^2 = 1, by bisection on
/// the bracket [min(x)/2 - 1/sqrt(K), max(x)/2].
///
/// The remaining iteration budget keeps bisecting past the convergence width
/// so tau varies smoothly with x down to round-off; a threshold that jumps in
/// 1e-12 steps would leak visible noise into finite-difference checks of the
/// gradients.
pub(crate) fn entmax15_threshold(z: &[f64]) -> Result<f64> {
    let k = z.len() as f64;
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = z.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut lo = min / 2.0 - k.sqrt().recip();
    let mut hi = max / 2.0;
    let f = |tau: f64| -> f64 {
        z.iter()
            .map(|&v| {
                let u = (v / 2.0 - tau).max(0.0);
                u * u
            })
            .sum::<f64>()
            - 1.0
    };
    let mut converged = false;
    for _ in 0..ENTMAX_MAX_ITERS {
        if hi - lo <= ENTMAX_BRACKET_TOL {
            converged = true;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Bracket is down to adjacent floats; nothing left to gain.
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "entmax threshold bisection did not converge: bracket [{lo}, {hi}]"
        )));
    }
    Ok(0.5 * (lo + hi))
}

/// EntMax with fixed alpha = 1.5: p_i = max(x_i/2 - tau*, 0)^2 with tau*
/// chosen so the result sums to one. May contain exact zeros.
pub fn entmax15(x: &Scores) -> Result<Simplex> {
    let z = x.as_slice();
    let tau = entmax15_threshold(z)?;
    let mut p: Vec<f64> = z
        .iter()
        .map(|&v| {
            let u = (v / 2.0 - tau).max(0.0);
            u * u
        })
        .collect();
    let sum: f64 = p.iter().sum();
    if sum <= 0.0 || !sum.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "entmax produced degenerate mass {sum}"
        )));
    }
    for v in &mut p {
        *v /= sum;
    }
    Simplex::new(p)
}

/// Ev-softmax: entries strictly below the arithmetic mean of the raw logits
/// are zeroed out; softmax at unit temperature over the survivors. Ties with
/// the mean survive.
pub fn ev_softmax(x: &Scores) -> Result<Simplex> {
    let z = x.as_slice();
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    if !mean.is_finite() {
        // Finite entries whose sum still overflows.
        return Err(Error::NumericalFailure(format!(
            "logit mean overflowed to {mean}"
        )));
    }
    let survivors: Vec<usize> = (0..z.len()).filter(|&i| z[i] >= mean).collect();
    debug_assert!(!survivors.is_empty());
    let m = survivors
        .iter()
        .map(|&i| z[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut p = vec![0.0; z.len()];
    let mut sum = 0.0;
    for &i in &survivors {
        let e = (z[i] - m).exp();
        p[i] = e;
        sum += e;
    }
    for &i in &survivors {
        p[i] /= sum;
    }
    Simplex::new(p)
}

/// Survivor mask used by ev-softmax (true where the entry keeps mass).
pub(crate) fn ev_softmax_support(z: &[f64]) -> Vec<bool> {
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    z.iter().map(|&v| v >= mean).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: &[f64]) -> Scores {
        Scores::from_slice(v).unwrap()
    }

    fn assert_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (i, (g, w)) in got.iter().zip(want).enumerate() {
            assert!(
                (g - w).abs() <= tol,
                "entry {i}: got {g}, want {w} (tol {tol})"
            );
        }
    }

    #[test]
    fn softmax_symmetric_input_is_uniform() {
        let p = softmax(&scores(&[0.0, 0.0]), Temperature::unit()).unwrap();
        assert_close(p.as_slice(), &[0.5, 0.5], 1e-15);
    }

    #[test]
    fn softmax_analytic_two_entry() {
        let p = softmax(&scores(&[2f64.ln(), 0.0]), Temperature::unit()).unwrap();
        assert_close(p.as_slice(), &[2.0 / 3.0, 1.0 / 3.0], 1e-15);
    }

    #[test]
    fn softmax_matches_direct_evaluation() {
        // Plain unshifted evaluation as an independent route.
        let x = [1.0_f64, 2.0, 3.0];
        let direct: Vec<f64> = {
            let z: f64 = x.iter().map(|v| v.exp()).sum();
            x.iter().map(|v| v.exp() / z).collect()
        };
        let p = softmax(&scores(&x), Temperature::unit()).unwrap();
        assert_close(p.as_slice(), &direct, 1e-15);
        assert_close(
            p.as_slice(),
            &[0.09003057317038046, 0.24472847105479767, 0.6652409557748219],
            1e-15,
        );
    }

    #[test]
    fn softmax_preserves_order_and_shift_invariance() {
        let x = [0.3, -1.2, 2.2, 0.9];
        let p = softmax(&scores(&x), Temperature::new(0.7).unwrap()).unwrap();
        for i in 0..x.len() {
            for j in 0..x.len() {
                if x[i] > x[j] {
                    assert!(p.as_slice()[i] > p.as_slice()[j]);
                }
            }
        }
        let shifted: Vec<f64> = x.iter().map(|v| v + 123.456).collect();
        let q = softmax(&scores(&shifted), Temperature::new(0.7).unwrap()).unwrap();
        assert_close(p.as_slice(), q.as_slice(), 1e-12);
    }

    #[test]
    fn multimax_identity_params_reduce_to_softmax() {
        let x = scores(&[1.0, 2.0, 3.0]);
        let p = multimax(&x, &ModulatorParams::identity(2)).unwrap();
        let q = softmax(&x, Temperature::unit()).unwrap();
        assert_close(p.as_slice(), q.as_slice(), 1e-12);
    }

    #[test]
    fn multimax_relu_params_clamp_negative_entries() {
        let p = multimax(&scores(&[-5.0, 0.0]), &ModulatorParams::relu()).unwrap();
        assert_close(p.as_slice(), &[0.5, 0.5], 1e-15);
    }

    /// Layer 12 of the published vision-transformer parameters nearly
    /// equalizes the two large entries and crushes the small ones far below
    /// their softmax mass.
    #[test]
    fn multimax_published_layer12_redistributes_mass() {
        let params = crate::modulator::ModulatorParams::new(vec![
            crate::modulator::OrderParams {
                b: 1.6852132,
                d: -0.04795134,
                t_b: 0.16383016,
                t_d: 0.25565386,
            },
            crate::modulator::OrderParams {
                b: 0.9796309,
                d: 2.1836245,
                t_b: 3.2074118,
                t_d: 0.99102634,
            },
        ])
        .unwrap();
        let x = scores(&[3.0, 2.8, -1.0, -1.5]);
        let mm = multimax(&x, &params).unwrap();
        let sm = softmax(&x, Temperature::unit()).unwrap();
        let (mm, sm) = (mm.as_slice(), sm.as_slice());
        // Top two nearly equal, and closer together than under softmax.
        assert!((mm[0] - mm[1]).abs() < 0.03, "top gap {}", mm[0] - mm[1]);
        assert!((mm[0] - mm[1]).abs() < (sm[0] - sm[1]).abs());
        // Small entries pushed far below their softmax probabilities.
        assert!(mm[2] < sm[2] / 10.0, "{} vs {}", mm[2], sm[2]);
        assert!(mm[3] < sm[3] / 10.0, "{} vs {}", mm[3], sm[3]);
    }

    #[test]
    fn sparsemax_uniform_ties() {
        let p = sparsemax(&scores(&[0.7, 0.7, 0.7])).unwrap();
        assert_close(p.as_slice(), &[1.0 / 3.0; 3], 1e-15);
    }

    #[test]
    fn sparsemax_unit_gap_is_one_hot() {
        let p = sparsemax(&scores(&[1.0, 0.0])).unwrap();
        assert_eq!(p.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn sparsemax_half_gap() {
        let p = sparsemax(&scores(&[0.5, 0.0])).unwrap();
        assert_close(p.as_slice(), &[0.75, 0.25], 1e-15);
    }

    #[test]
    fn entmax_symmetric_input_is_uniform() {
        let p = entmax15(&scores(&[3.3, 3.3])).unwrap();
        assert_close(p.as_slice(), &[0.5, 0.5], 1e-12);
    }

    #[test]
    fn entmax_collapses_at_large_gap() {
        for t in [2.0 * 2f64.sqrt(), 3.0, 10.0] {
            let p = entmax15(&scores(&[t, 0.0])).unwrap();
            assert_close(p.as_slice(), &[1.0, 0.0], 1e-12);
        }
    }

    #[test]
    fn entmax_satisfies_closed_form() {
        let x = [1.0, 0.5, 0.0];
        let p = entmax15(&scores(&x)).unwrap();
        let tau = entmax15_threshold(&x).unwrap();
        for (pi, xi) in p.as_slice().iter().zip(&x) {
            let u = (xi / 2.0 - tau).max(0.0);
            assert!(
                (pi - u * u).abs() < 1e-10,
                "p {pi} vs closed form {}",
                u * u
            );
        }
        let sum: f64 = p.as_slice().iter().sum();
        assert!((sum - 1.0).abs() < 1e-10);
    }

    #[test]
    fn entmax_rejects_absurd_ranges() {
        // Bracket too wide to reach the stopping width in the iteration cap.
        let r = entmax15(&scores(&[1e300, 0.0]));
        assert!(matches!(r, Err(Error::NumericalFailure(_))));
    }

    #[test]
    fn ev_softmax_keeps_mean_ties() {
        let p = ev_softmax(&scores(&[0.7, 0.7, 0.7])).unwrap();
        assert_close(p.as_slice(), &[1.0 / 3.0; 3], 1e-15);
    }

    #[test]
    fn ev_softmax_drops_below_mean_entries() {
        let p = ev_softmax(&scores(&[1.0, 2.0, 3.0])).unwrap();
        let e2 = 2f64.exp();
        let e3 = 3f64.exp();
        assert_eq!(p.as_slice()[0], 0.0);
        assert_close(&p.as_slice()[1..], &[e2 / (e2 + e3), e3 / (e2 + e3)], 1e-14);
    }

    #[test]
    fn ev_softmax_single_survivor() {
        let p = ev_softmax(&scores(&[0.0, 10.0])).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn ev_softmax_rejects_overflowing_mean() {
        let r = ev_softmax(&scores(&[1e308, 1e308]));
        assert!(matches!(r, Err(Error::NumericalFailure(_))));
    }

    #[test]
    fn all_functions_uniform_on_equal_inputs() {
        let x = scores(&[1.3, 1.3, 1.3, 1.3]);
        let uniform = [0.25; 4];
        for p in [
            softmax(&x, Temperature::unit()).unwrap(),
            multimax(&x, &ModulatorParams::identity(2)).unwrap(),
            sparsemax(&x).unwrap(),
            entmax15(&x).unwrap(),
            ev_softmax(&x).unwrap(),
        ] {
            assert_close(p.as_slice(), &uniform, 1e-12);
        }
    }
}
