use crate::error::Result;
use crate::functions::{entmax15, ev_softmax, multimax, softmax, sparsemax};
use crate::modulator::ModulatorParams;
use crate::types::{Scores, Simplex, Temperature};
use serde::{Deserialize, Serialize};

/// Uniform dispatch over the reweighting functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReweightSpec {
    Softmax(Temperature),
    Multimax(ModulatorParams),
    Sparsemax,
    Entmax15,
    EvSoftmax,
}

impl ReweightSpec {
    pub fn softmax_unit() -> Self {
        ReweightSpec::Softmax(Temperature::unit())
    }

    /// MultiMax starting exactly at the softmax baseline.
    pub fn multimax_identity(orders: usize) -> Self {
        ReweightSpec::Multimax(ModulatorParams::identity(orders))
    }

    pub fn name(&self) -> &'static str {
        match self {
            ReweightSpec::Softmax(_) => "softmax",
            ReweightSpec::Multimax(_) => "multimax",
            ReweightSpec::Sparsemax => "sparsemax",
            ReweightSpec::Entmax15 => "entmax15",
            ReweightSpec::EvSoftmax => "evsoftmax",
        }
    }
}

/// Evaluate the reweighting function selected by `spec` on `x`.
pub fn reweight(spec: &ReweightSpec, x: &Scores) -> Result<Simplex> {
    match spec {
        ReweightSpec::Softmax(tau) => softmax(x, *tau),
        ReweightSpec::Multimax(params) => multimax(x, params),
        ReweightSpec::Sparsemax => sparsemax(x),
        ReweightSpec::Entmax15 => entmax15(x),
        ReweightSpec::EvSoftmax => ev_softmax(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispatch_matches_direct_calls() {
        let x = Scores::from_slice(&[0.0, 0.0]).unwrap();
        let p = reweight(&ReweightSpec::softmax_unit(), &x).unwrap();
        assert_eq!(p.as_slice(), &[0.5, 0.5]);

        let x = Scores::from_slice(&[1.0, 0.0]).unwrap();
        let p = reweight(&ReweightSpec::Sparsemax, &x).unwrap();
        assert_eq!(p.as_slice(), &[1.0, 0.0]);

        let x = Scores::from_slice(&[1.0, 2.0, 3.0]).unwrap();
        let p = reweight(&ReweightSpec::multimax_identity(2), &x).unwrap();
        let q = softmax(&x, Temperature::unit()).unwrap();
        for (a, b) in p.as_slice().iter().zip(q.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn spec_serde_round_trip() {
        let specs = [
            ReweightSpec::Softmax(Temperature::new(0.5).unwrap()),
            ReweightSpec::multimax_identity(2),
            ReweightSpec::Sparsemax,
            ReweightSpec::Entmax15,
            ReweightSpec::EvSoftmax,
        ];
        for s in specs {
            let json = serde_json::to_string(&s).unwrap();
            let back: ReweightSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(s, back);
        }
        assert!(serde_json::from_str::<ReweightSpec>(r#"{"softmax":-2.0}"#).is_err());
    }
}
