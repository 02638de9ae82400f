//! Multi-modality/sparsity sweeps along a one-parameter family of
//! reweighting functions.

use crate::error::Result;
use crate::metrics::{multimodality, sparsity, MetricConfig};
use reweight_core::{reweight, ReweightSpec, Scores, Temperature};

/// One point of a sweep: the knob value and the two metric scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoPoint {
    pub knob: f64,
    pub m_score: f64,
    pub s_score: f64,
    pub m_vacuous: bool,
    pub s_vacuous: bool,
}

/// Evaluate `family` at each knob value, measuring M and S of the output
/// against the original (unscaled) input.
///
/// For the softmax family the knob is the temperature divisor. The other
/// functions have no temperature parameter, so the knob divides the input
/// instead, which is the equivalent notion of tempering for them (for
/// softmax the two coincide).
pub fn pareto_sweep(
    x: &Scores,
    family: &ReweightSpec,
    grid: &[f64],
    cfg: &MetricConfig,
) -> Result<Vec<ParetoPoint>> {
    if grid.is_empty() {
        return Err(crate::error::Error::InvalidInput("empty sweep grid".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    for &knob in grid {
        let phi = match family {
            ReweightSpec::Softmax(_) => {
                reweight(&ReweightSpec::Softmax(Temperature::new(knob)?), x)?
            }
            other => {
                let tau = Temperature::new(knob)?;
                let scaled: Vec<f64> = x.as_slice().iter().map(|v| v / tau.tau()).collect();
                reweight(other, &Scores::new(scaled)?)?
            }
        };
        // Relevance is judged on the original input in both branches.
        let m = multimodality(x, &phi, cfg)?;
        let s = sparsity(x, &phi, cfg)?;
        points.push(ParetoPoint {
            knob,
            m_score: m.value,
            s_score: s.value,
            m_vacuous: m.vacuous,
            s_vacuous: s.vacuous,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::default_reference;

    fn scores(v: &[f64]) -> Scores {
        Scores::from_slice(v).unwrap()
    }

    #[test]
    fn softmax_sweep_trades_multimodality_for_sparsity() {
        let x = scores(&[2.0, 1.0, 0.0]);
        let s_ref = default_reference(&x).unwrap();
        // Threshold strictly below the middle entry so it counts as relevant.
        let cfg = MetricConfig::new(0.5, s_ref).unwrap();
        let pts = pareto_sweep(&x, &ReweightSpec::softmax_unit(), &[0.25, 1.0, 4.0], &cfg).unwrap();
        assert_eq!(pts.len(), 3);
        assert!(pts.windows(2).all(|w| w[0].m_score < w[1].m_score));
        assert!(pts.windows(2).all(|w| w[0].s_score > w[1].s_score));
        assert!(pts.iter().all(|p| !p.m_vacuous && !p.s_vacuous));
    }

    #[test]
    fn mean_abs_threshold_on_this_input_leaves_no_relevant_entries() {
        // With epsilon = mean |x| = 1 the middle entry x = 1 is excluded by
        // the strict comparison, so M degenerates to the flagged constant 1
        // while S still sweeps.
        let x = scores(&[2.0, 1.0, 0.0]);
        let eps = crate::metrics::mean_abs(&x);
        assert_eq!(eps, 1.0);
        let cfg = MetricConfig::new(eps, default_reference(&x).unwrap()).unwrap();
        let pts = pareto_sweep(&x, &ReweightSpec::softmax_unit(), &[0.25, 1.0, 4.0], &cfg).unwrap();
        assert!(pts.iter().all(|p| p.m_vacuous && p.m_score == 1.0));
        assert!(pts.windows(2).all(|w| w[0].s_score > w[1].s_score));
    }

    #[test]
    fn learned_params_dominate_softmax_on_both_metrics() {
        // Layer 12 of the published vision-transformer parameters against
        // unit-temperature softmax, both measured through the sweep.
        let params = reweight_core::ModulatorParams::new(vec![
            reweight_core::OrderParams {
                b: 1.6852132,
                d: -0.04795134,
                t_b: 0.16383016,
                t_d: 0.25565386,
            },
            reweight_core::OrderParams {
                b: 0.9796309,
                d: 2.1836245,
                t_b: 3.2074118,
                t_d: 0.99102634,
            },
        ])
        .unwrap();
        let x = scores(&[3.0, 2.8, -1.0, -1.5]);
        let cfg = MetricConfig::new(0.0, default_reference(&x).unwrap()).unwrap();
        let mm = pareto_sweep(&x, &ReweightSpec::Multimax(params), &[1.0], &cfg).unwrap();
        let sm = pareto_sweep(&x, &ReweightSpec::softmax_unit(), &[1.0], &cfg).unwrap();
        assert!(mm[0].m_score > sm[0].m_score);
        assert!(mm[0].s_score > sm[0].s_score);
        assert!(!mm[0].m_vacuous && !mm[0].s_vacuous);
    }

    #[test]
    fn single_point_grid() {
        let x = scores(&[1.0, 0.0]);
        let cfg = MetricConfig::new(0.5, 0.5).unwrap();
        let pts = pareto_sweep(&x, &ReweightSpec::Sparsemax, &[1.0], &cfg).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].knob, 1.0);
    }

    #[test]
    fn empty_grid_rejected() {
        let x = scores(&[1.0, 0.0]);
        let cfg = MetricConfig::new(0.5, 0.5).unwrap();
        assert!(pareto_sweep(&x, &ReweightSpec::Sparsemax, &[], &cfg).is_err());
    }

    #[test]
    fn scaled_input_matches_temperature_for_softmax() {
        // The two knob conventions agree for softmax, which justifies using
        // input scaling for the parameterless functions.
        let x = scores(&[1.5, -0.5, 0.25]);
        let tau = 2.5;
        let a = reweight(&ReweightSpec::Softmax(Temperature::new(tau).unwrap()), &x).unwrap();
        let scaled: Vec<f64> = x.as_slice().iter().map(|v| v / tau).collect();
        let b = reweight(&ReweightSpec::softmax_unit(), &scores(&scaled)).unwrap();
        for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((p - q).abs() < 1e-15);
        }
    }
}
