//! Multi-modality and sparsity metrics for reweighting functions.
//!
//! Both metrics look at a score vector x together with the probabilities
//! phi(x) some reweighting function produced for it. Entries are classified
//! by their *input* value against a relevance threshold epsilon:
//!
//! * multi-modality M = 1 - mean over {epsilon < x_n < x_max} of
//!   (phi_max - phi_n); relevant entries close to the peak probability score
//!   high. Entries tied with the maximum are excluded, both comparisons are
//!   strict.
//! * sparsity S = mean over {x_l < epsilon} of exp((s - phi_l)/s - 1), a
//!   smooth step approximation saturating at 1 for exact zeros; s is the
//!   reference scale.

use crate::error::{Error, Result};
use reweight_core::{softmax, Scores, Simplex, Temperature};

/// Relevance threshold and sparsity reference scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    pub epsilon: f64,
    /// Reference value in (0, 1] for the sparsity scaling.
    pub s: f64,
}

impl MetricConfig {
    pub fn new(epsilon: f64, s: f64) -> Result<Self> {
        if !epsilon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "epsilon must be finite, got {epsilon}"
            )));
        }
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "sparsity reference must lie in (0, 1], got {s}"
            )));
        }
        Ok(MetricConfig { epsilon, s })
    }
}

/// A metric value plus a flag marking degenerate cases (no qualifying
/// entries), so sweeps stay total while degenerate points remain detectable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub value: f64,
    pub vacuous: bool,
}

fn check_lengths(x: &Scores, phi: &Simplex) -> Result<()> {
    if x.len() != phi.len() {
        return Err(Error::InvalidInput(format!(
            "scores length {} does not match probabilities length {}",
            x.len(),
            phi.len()
        )));
    }
    Ok(())
}

/// Multi-modality of `phi` (the output of some reweighting function on `x`).
/// Returns 1 flagged vacuous when no entry lies strictly between epsilon and
/// the maximum.
pub fn multimodality(x: &Scores, phi: &Simplex, cfg: &MetricConfig) -> Result<MetricValue> {
    check_lengths(x, phi)?;
    let xs = x.as_slice();
    let ps = phi.as_slice();
    let x_max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let argmax = xs.iter().position(|&v| v == x_max).unwrap();
    let phi_max = ps[argmax];

    let mut gap_sum = 0.0;
    let mut count = 0usize;
    for (&xi, &pi) in xs.iter().zip(ps) {
        if xi > cfg.epsilon && xi < x_max {
            gap_sum += phi_max - pi;
            count += 1;
        }
    }
    if count == 0 {
        return Ok(MetricValue {
            value: 1.0,
            vacuous: true,
        });
    }
    Ok(MetricValue {
        value: 1.0 - gap_sum / count as f64,
        vacuous: false,
    })
}

/// Sparsity of `phi` over entries whose input lies strictly below epsilon.
/// Returns 0 flagged vacuous when no entry qualifies.
pub fn sparsity(x: &Scores, phi: &Simplex, cfg: &MetricConfig) -> Result<MetricValue> {
    check_lengths(x, phi)?;
    if !(cfg.s > 0.0 && cfg.s <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "sparsity reference must lie in (0, 1], got {}",
            cfg.s
        )));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (&xi, &pi) in x.as_slice().iter().zip(phi.as_slice()) {
        if xi < cfg.epsilon {
            sum += ((cfg.s - pi) / cfg.s - 1.0).exp();
            count += 1;
        }
    }
    if count == 0 {
        return Ok(MetricValue {
            value: 0.0,
            vacuous: true,
        });
    }
    Ok(MetricValue {
        value: sum / count as f64,
        vacuous: false,
    })
}

/// Default sparsity reference: the smallest unit-temperature softmax
/// probability of the input.
pub fn default_reference(x: &Scores) -> Result<f64> {
    let p = softmax(x, Temperature::unit())?;
    Ok(p.as_slice().iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Mean absolute-value threshold, a common epsilon choice for sweeps.
pub fn mean_abs(x: &Scores) -> f64 {
    x.as_slice().iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use reweight_core::Scores;

    fn scores(v: &[f64]) -> Scores {
        Scores::from_slice(v).unwrap()
    }

    fn softmax_unit(x: &Scores) -> Simplex {
        softmax(x, Temperature::unit()).unwrap()
    }

    /// Direct transcription of the definitions, kept independent of the
    /// library routines above.
    fn multimodality_by_hand(x: &[f64], p: &[f64], eps: f64) -> Option<f64> {
        let xmax = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let pmax = p[x.iter().position(|v| *v == xmax).unwrap()];
        let gaps: Vec<f64> = x
            .iter()
            .zip(p)
            .filter(|(xi, _)| **xi > eps && **xi < xmax)
            .map(|(_, pi)| pmax - pi)
            .collect();
        if gaps.is_empty() {
            None
        } else {
            Some(1.0 - gaps.iter().sum::<f64>() / gaps.len() as f64)
        }
    }

    #[test]
    fn multimodality_matches_hand_computation() {
        let x = scores(&[2.0, 1.0, 0.0]);
        let phi = softmax_unit(&x);
        let cfg = MetricConfig::new(0.5, 0.5).unwrap();
        let m = multimodality(&x, &phi, &cfg).unwrap();
        let want = multimodality_by_hand(x.as_slice(), phi.as_slice(), 0.5).unwrap();
        assert!(!m.vacuous);
        assert!((m.value - want).abs() < 1e-15);
        // Only x = 1 qualifies: 1 - (phi(2) - phi(1)).
        assert!((m.value - 0.579487515).abs() < 1e-9, "got {}", m.value);
    }

    #[test]
    fn multimodality_is_one_when_gaps_vanish() {
        // All qualifying outputs equal the max output.
        let x = scores(&[1.0, 1.0, -5.0]);
        let phi = softmax_unit(&x);
        let cfg = MetricConfig::new(-10.0, 0.5).unwrap();
        let m = multimodality(&x, &phi, &cfg).unwrap();
        // Ties with the max are excluded; only -5 qualifies.
        assert!(!m.vacuous);
        let gap = phi.as_slice()[0] - phi.as_slice()[2];
        assert!((m.value - (1.0 - gap)).abs() < 1e-15);
    }

    #[test]
    fn multimodality_vacuous_above_all_entries() {
        let x = scores(&[2.0, 1.0, 0.0]);
        let phi = softmax_unit(&x);
        let cfg = MetricConfig::new(1.5, 0.5).unwrap();
        let m = multimodality(&x, &phi, &cfg).unwrap();
        assert!(m.vacuous);
        assert_eq!(m.value, 1.0);
    }

    #[test]
    fn sparsity_saturates_at_exact_zero() {
        let x = scores(&[-1.0, 3.0]);
        let phi = Simplex::new(vec![0.0, 1.0]).unwrap();
        let cfg = MetricConfig::new(0.0, 0.3).unwrap();
        let s = sparsity(&x, &phi, &cfg).unwrap();
        assert!(!s.vacuous);
        assert_eq!(s.value, 1.0);
    }

    #[test]
    fn sparsity_at_reference_point_is_exp_minus_one() {
        let x = scores(&[-1.0, 3.0]);
        let cfg = MetricConfig::new(0.0, 0.25).unwrap();
        let phi = Simplex::new(vec![0.25, 0.75]).unwrap();
        let s = sparsity(&x, &phi, &cfg).unwrap();
        assert!((s.value - (-1.0_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn sparsity_with_default_reference_on_three_entries() {
        let x = scores(&[2.0, 1.0, 0.0]);
        let phi = softmax_unit(&x);
        let s_ref = default_reference(&x).unwrap();
        let cfg = MetricConfig::new(0.5, s_ref).unwrap();
        let s = sparsity(&x, &phi, &cfg).unwrap();
        // The single qualifying entry sits exactly at the reference.
        assert!((s.value - (-1.0_f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn sparsity_vacuous_below_all_entries() {
        let x = scores(&[2.0, 1.0, 0.0]);
        let phi = softmax_unit(&x);
        let cfg = MetricConfig::new(-1.0, 0.5).unwrap();
        let s = sparsity(&x, &phi, &cfg).unwrap();
        assert!(s.vacuous);
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn default_reference_examples() {
        assert!((default_reference(&scores(&[0.0, 0.0])).unwrap() - 0.5).abs() < 1e-15);
        assert!(
            (default_reference(&scores(&[1.0, 2.0, 3.0])).unwrap() - 0.09003057317038046).abs()
                < 1e-15
        );
        let tiny = default_reference(&scores(&[10.0, 0.0])).unwrap();
        assert!((tiny - 4.5397868702434395e-5).abs() < 1e-17);
    }

    #[test]
    fn length_mismatch_rejected() {
        let x = scores(&[1.0, 2.0, 3.0]);
        let phi = Simplex::new(vec![0.5, 0.5]).unwrap();
        let cfg = MetricConfig::new(0.0, 0.5).unwrap();
        assert!(multimodality(&x, &phi, &cfg).is_err());
        assert!(sparsity(&x, &phi, &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(MetricConfig::new(f64::NAN, 0.5).is_err());
        assert!(MetricConfig::new(0.0, 0.0).is_err());
        assert!(MetricConfig::new(0.0, 1.5).is_err());
        assert!(MetricConfig::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn metric_ranges_hold_on_random_draws() {
        let mut rng = reweight_core::rng::SplitMix64::new(5);
        for _ in 0..2000 {
            let xs: Vec<f64> = (0..8).map(|_| rng.normal()).collect();
            let x = scores(&xs);
            let phi = softmax_unit(&x);
            let cfg = MetricConfig::new(rng.uniform(-2.0, 2.0), rng.uniform(0.01, 1.0)).unwrap();
            let m = multimodality(&x, &phi, &cfg).unwrap();
            let s = sparsity(&x, &phi, &cfg).unwrap();
            if !m.vacuous {
                assert!(
                    (0.0..=1.0).contains(&m.value),
                    "M out of range: {}",
                    m.value
                );
            }
            if !s.vacuous {
                assert!(
                    s.value > 0.0 && s.value <= 1.0,
                    "S out of range: {}",
                    s.value
                );
            }
        }
    }
}
