//! Randomized verification suites for the metric and modulation
//! inequalities. Each check draws its own deterministic stream from the
//! caller's seed, counts violations beyond a fixed slack, and keeps the
//! worst margin plus the first offending draw for replay.
//!
//! Draw protocol shared by the suites: score vectors are K = 8 i.i.d.
//! standard normals unless a check says otherwise; thresholds that a
//! derivation requires (the log-sum bound for the low-side comparisons, the
//! breakpoint-ratio bound for the full modulator) are applied per draw.

use crate::metrics::{default_reference, mean_abs, multimodality, sparsity, MetricConfig};
use reweight_core::rng::SplitMix64;
use reweight_core::{multimax, softmax, ModulatorParams, Scores, Temperature};

/// Margins below -SLACK count as violations.
pub const SLACK: f64 = 1e-12;

const K: usize = 8;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct PropCheck {
    pub name: String,
    pub trials: u64,
    pub violations: u64,
    /// Trials where no entry qualified, so the inequality held vacuously.
    pub vacuous: u64,
    /// Smallest margin observed; negative means the inequality failed by
    /// that much somewhere.
    pub worst_slack: f64,
    /// First offending draw, serialized for replay.
    pub first_violation: Option<String>,
}

impl PropCheck {
    fn new(name: &str, trials: u64) -> Self {
        PropCheck {
            name: name.to_string(),
            trials,
            violations: 0,
            vacuous: 0,
            worst_slack: f64::INFINITY,
            first_violation: None,
        }
    }

    fn record(&mut self, margin: f64, context: impl Fn() -> String) {
        if margin < self.worst_slack {
            self.worst_slack = margin;
        }
        if margin < -SLACK {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(context());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Report over all checks, deterministic per seed.
#[derive(Debug, Clone, PartialEq)]
pub struct PropReport {
    pub seed: u64,
    pub trials: u64,
    pub checks: Vec<PropCheck>,
}

impl PropReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed())
    }
}

fn normal_scores(rng: &mut SplitMix64) -> Vec<f64> {
    (0..K).map(|_| rng.normal()).collect()
}

fn softmax_unit(x: &Scores) -> Vec<f64> {
    softmax(x, Temperature::unit()).unwrap().into_vec()
}

/// Pointwise bounds of the linear modulation t*x + (1-t)*b against x, in all
/// four (x vs b, t vs 1) regimes.
pub fn check_modulation_bounds(trials: u64, seed: u64) -> PropCheck {
    let mut check = PropCheck::new("modulation_bounds", trials);
    let mut rng = SplitMix64::stream(seed, 0);
    for _ in 0..trials {
        let mut x = rng.normal() * 1.5;
        let b = rng.normal() * 1.5;
        while (x - b).abs() < 1e-9 {
            x = rng.normal() * 1.5;
        }
        let t_hi = rng.uniform(1.0 + 1e-6, 4.0);
        let t_lo = rng.uniform(1e-6, 1.0 - 1e-6);
        let lin = |t: f64| t * x + (1.0 - t) * b;
        // Steepening pushes x away from b, flattening pulls it toward b.
        let (m_hi, m_lo) = if x < b {
            (x - lin(t_hi), lin(t_lo) - x)
        } else {
            (lin(t_hi) - x, x - lin(t_lo))
        };
        let ctx = || format!("x={x:?} b={b:?} t_hi={t_hi:?} t_lo={t_lo:?}");
        check.record(m_hi, ctx);
        check.record(m_lo, ctx);
    }
    check
}

/// Sum of exponentials under steepened differences dominates the plain sum,
/// provided the anchor sits below the log-sum bound
/// (sum of below-threshold entries minus ln L, averaged).
pub fn check_exp_sum_bound(trials: u64, seed: u64) -> PropCheck {
    let mut check = PropCheck::new("exp_sum_bound", trials);
    let mut rng = SplitMix64::stream(seed, 1);
    for _ in 0..trials {
        let (below, b) = loop {
            let x = normal_scores(&mut rng);
            let b = rng.normal() + 0.5;
            let below: Vec<f64> = x.iter().cloned().filter(|v| *v < b).collect();
            if !below.is_empty() {
                break (below, b);
            }
        };
        let l = below.len() as f64;
        let bound = (below.iter().sum::<f64>() - l.ln()) / l;
        let eps = bound - rng.uniform(0.0, 0.5);
        let x_i = eps - rng.uniform(1e-3, 2.0);
        let t = rng.uniform(1.0 + 1e-6, 4.0);
        let steep: f64 = below.iter().map(|v| (t * (v - x_i)).exp()).sum();
        let plain: f64 = below.iter().map(|v| (v - x_i).exp()).sum();
        check.record(steep - plain, || {
            format!("below={below:?} b={b:?} eps={eps:?} x_i={x_i:?} t={t:?}")
        });
    }
    check
}

const TAU_GRID: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// Softmax multi-modality is nondecreasing in the temperature divisor.
pub fn check_softmax_multimodality_monotone(trials: u64, seed: u64) -> PropCheck {
    let mut check = PropCheck::new("softmax_multimodality_monotone", trials);
    let mut rng = SplitMix64::stream(seed, 2);
    for _ in 0..trials {
        let xs = normal_scores(&mut rng);
        let x = Scores::new(xs.clone()).unwrap();
        let cfg = MetricConfig::new(mean_abs(&x), 0.5).unwrap();
        let ms: Vec<_> = TAU_GRID
            .iter()
            .map(|&tau| {
                let phi = softmax(&x, Temperature::new(tau).unwrap()).unwrap();
                multimodality(&x, &phi, &cfg).unwrap()
            })
            .collect();
        if ms[0].vacuous {
            check.vacuous += 1;
        }
        for w in ms.windows(2) {
            check.record(w[1].value - w[0].value, || format!("x={xs:?}"));
        }
    }
    check
}

/// Softmax sparsity is nonincreasing in the temperature divisor when the
/// relevance threshold does not exceed the mean absolute entry.
pub fn check_softmax_sparsity_antimonotone(trials: u64, seed: u64) -> PropCheck {
    let mut check = PropCheck::new("softmax_sparsity_antimonotone", trials);
    let mut rng = SplitMix64::stream(seed, 3);
    for _ in 0..trials {
        let xs = normal_scores(&mut rng);
        let x = Scores::new(xs.clone()).unwrap();
        let cfg = MetricConfig::new(mean_abs(&x), default_reference(&x).unwrap()).unwrap();
        let ss: Vec<_> = TAU_GRID
            .iter()
            .map(|&tau| {
                let phi = softmax(&x, Temperature::new(tau).unwrap()).unwrap();
                sparsity(&x, &phi, &cfg).unwrap()
            })
            .collect();
        if ss[0].vacuous {
            check.vacuous += 1;
        }
        for w in ss.windows(2) {
            check.record(w[0].value - w[1].value, || format!("x={xs:?}"));
        }
    }
    check
}

struct LowSideDraw {
    xs: Vec<f64>,
    b: f64,
    t_b: f64,
    eps: f64,
}

/// Shared draw for the low-side-modulation comparisons: a breakpoint with at
/// least one entry below it, steepening factor above one, and the threshold
/// at the log-sum bound of the below-breakpoint entries.
fn draw_low_side(rng: &mut SplitMix64) -> LowSideDraw {
    loop {
        let xs = normal_scores(rng);
        let b = rng.normal();
        let t_b = rng.uniform(1.1, 4.0);
        let below: Vec<f64> = xs.iter().cloned().filter(|v| *v < b).collect();
        if below.is_empty() {
            continue;
        }
        let l = below.len() as f64;
        let eps = (below.iter().sum::<f64>() - l.ln()) / l;
        return LowSideDraw { xs, b, t_b, eps };
    }
}

fn low_side_params(b: f64, t_b: f64) -> ModulatorParams {
    // Only the below-breakpoint term is active; t_d = 1 silences the other.
    ModulatorParams::first_order(b, b, t_b, 1.0).unwrap()
}

/// Entries below the threshold get no more mass under low-side modulation
/// than under unit-temperature softmax.
pub fn check_low_modulation_sparsity(trials: u64, seed: u64) -> PropCheck {
    let mut check = PropCheck::new("low_modulation_sparsity", trials);
    let mut rng = SplitMix64::stream(seed, 4);
    for _ in 0..trials {
        let draw = draw_low_side(&mut rng);
        let x = Scores::new(draw.xs.clone()).unwrap();
        let phi_low = multimax(&x, &low_side_params(draw.b, draw.t_b))
            .unwrap()
            .into_vec();
        let phi_sm = softmax_unit(&x);
        let mut qualifying = false;
        for i in 0..draw.xs.len() {
            if draw.xs[i] < draw.eps {
                qualifying = true;
                check.record(phi_sm[i] - phi_low[i], || {
                    format!(
                        "x={:?} b={:?} t_b={:?} eps={:?} entry={i}",
                        draw.xs, draw.b, draw.t_b, draw.eps
                    )
                });
            }
        }
        if !qualifying {
            check.vacuous += 1;
        }
    }
    check
}

/// Multi-modality of low-side modulation measured against unit-temperature
/// softmax at the same threshold.
pub fn check_low_modulation_multimodality(trials: u64, seed: u64) -> PropCheck {
    let mut check = PropCheck::new("low_modulation_multimodality", trials);
    let mut rng = SplitMix64::stream(seed, 5);
    for _ in 0..trials {
        let draw = draw_low_side(&mut rng);
        let x = Scores::new(draw.xs.clone()).unwrap();
        let cfg = MetricConfig::new(draw.eps, 0.5).unwrap();
        let phi_low = multimax(&x, &low_side_params(draw.b, draw.t_b)).unwrap();
        let phi_sm = softmax(&x, Temperature::unit()).unwrap();
        let m_low = multimodality(&x, &phi_low, &cfg).unwrap();
        let m_sm = multimodality(&x, &phi_sm, &cfg).unwrap();
        if m_low.vacuous {
            check.vacuous += 1;
        }
        check.record(m_low.value - m_sm.value, || {
            format!(
                "x={:?} b={:?} t_b={:?} eps={:?}",
                draw.xs, draw.b, draw.t_b, draw.eps
            )
        });
    }
    check
}

struct FullDraw {
    xs: Vec<f64>,
    b: f64,
    d: f64,
    t_b: f64,
    t_d: f64,
    eps: f64,
}

/// Draw for the full-modulator comparisons: ordered breakpoints b <= d, at
/// least one entry below b, steepening below and flattening above, and the
/// threshold under both the log-sum bound and the breakpoint-ratio bound.
fn draw_full(rng: &mut SplitMix64) -> FullDraw {
    loop {
        let xs = normal_scores(rng);
        let (r1, r2) = (rng.normal(), rng.normal());
        let (b, d) = (r1.min(r2), r1.max(r2));
        let t_b = rng.uniform(1.1, 4.0);
        let t_d = rng.uniform(0.1, 0.9);
        let below: Vec<f64> = xs.iter().cloned().filter(|v| *v < b).collect();
        if below.is_empty() {
            continue;
        }
        let l = below.len() as f64;
        let log_sum_bound = (below.iter().sum::<f64>() - l.ln()) / l;
        let x_max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ratio_bound = if x_max > d {
            b - (1.0 - t_d) / (t_b - 1.0) * (x_max - d)
        } else {
            f64::INFINITY
        };
        let eps = log_sum_bound.min(ratio_bound);
        return FullDraw {
            xs,
            b,
            d,
            t_b,
            t_d,
            eps,
        };
    }
}

/// Entries below the threshold get no more mass under the full modulator
/// than under unit-temperature softmax.
pub fn check_full_modulation_sparsity(trials: u64, seed: u64) -> PropCheck {
    let mut check = PropCheck::new("full_modulation_sparsity", trials);
    let mut rng = SplitMix64::stream(seed, 6);
    for _ in 0..trials {
        let draw = draw_full(&mut rng);
        let x = Scores::new(draw.xs.clone()).unwrap();
        let params = ModulatorParams::first_order(draw.b, draw.d, draw.t_b, draw.t_d).unwrap();
        let phi_full = multimax(&x, &params).unwrap().into_vec();
        let phi_sm = softmax_unit(&x);
        let mut qualifying = false;
        for i in 0..draw.xs.len() {
            if draw.xs[i] < draw.eps {
                qualifying = true;
                check.record(phi_sm[i] - phi_full[i], || {
                    format!(
                        "x={:?} b={:?} d={:?} t_b={:?} t_d={:?} eps={:?} entry={i}",
                        draw.xs, draw.b, draw.d, draw.t_b, draw.t_d, draw.eps
                    )
                });
            }
        }
        if !qualifying {
            check.vacuous += 1;
        }
    }
    check
}

/// Flattening the large entries improves multi-modality over low-side
/// modulation alone.
pub fn check_full_modulation_multimodality(trials: u64, seed: u64) -> PropCheck {
    let mut check = PropCheck::new("full_modulation_multimodality", trials);
    let mut rng = SplitMix64::stream(seed, 7);
    for _ in 0..trials {
        let draw = draw_full(&mut rng);
        let x = Scores::new(draw.xs.clone()).unwrap();
        let full = ModulatorParams::first_order(draw.b, draw.d, draw.t_b, draw.t_d).unwrap();
        let low = ModulatorParams::first_order(draw.b, draw.d, draw.t_b, 1.0).unwrap();
        let cfg = MetricConfig::new(draw.eps, 0.5).unwrap();
        let m_full = multimodality(&x, &multimax(&x, &full).unwrap(), &cfg).unwrap();
        let m_low = multimodality(&x, &multimax(&x, &low).unwrap(), &cfg).unwrap();
        if m_full.vacuous {
            check.vacuous += 1;
        }
        check.record(m_full.value - m_low.value, || {
            format!(
                "x={:?} b={:?} d={:?} t_b={:?} t_d={:?} eps={:?}",
                draw.xs, draw.b, draw.d, draw.t_b, draw.t_d, draw.eps
            )
        });
    }
    check
}

/// Run every suite at the given trial count.
pub fn run_all(trials: u64, seed: u64) -> PropReport {
    PropReport {
        seed,
        trials,
        checks: vec![
            check_modulation_bounds(trials, seed),
            check_exp_sum_bound(trials, seed),
            check_softmax_multimodality_monotone(trials, seed),
            check_softmax_sparsity_antimonotone(trials, seed),
            check_low_modulation_sparsity(trials, seed),
            check_low_modulation_multimodality(trials, seed),
            check_full_modulation_sparsity(trials, seed),
            check_full_modulation_multimodality(trials, seed),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_is_deterministic_per_seed() {
        let a = run_all(200, 42);
        let b = run_all(200, 42);
        assert_eq!(a, b);
        let c = run_all(200, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn pointwise_and_monotonicity_checks_pass() {
        for check in [
            check_modulation_bounds(2000, 7),
            check_exp_sum_bound(2000, 7),
            check_softmax_multimodality_monotone(1000, 7),
            check_softmax_sparsity_antimonotone(1000, 7),
            check_low_modulation_sparsity(1000, 7),
            check_full_modulation_sparsity(1000, 7),
            check_full_modulation_multimodality(1000, 7),
        ] {
            assert!(
                check.passed(),
                "{}: {} violations, worst {}, first {:?}",
                check.name,
                check.violations,
                check.worst_slack,
                check.first_violation
            );
        }
    }
}
