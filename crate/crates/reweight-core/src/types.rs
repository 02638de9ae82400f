use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Sum of a probability vector may drift from 1 by at most this much.
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;

/// A vector of input logits: finite entries, length at least 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores(Vec<f64>);

impl Scores {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 entries, got {}",
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite entry {bad}")));
        }
        Ok(Scores(entries))
    }

    pub fn from_slice(entries: &[f64]) -> Result<Self> {
        Self::new(entries.to_vec())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Scores {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Temperature as a divisor: probabilities come from exp(x / tau).
///
/// Small tau sharpens the distribution, large tau flattens it. The inverse
/// multiplier t = 1/tau is available via [`Temperature::inverse`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(tau: f64) -> Result<Self> {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::InvalidTemperature(tau));
        }
        Ok(Temperature(tau))
    }

    pub fn tau(&self) -> f64 {
        self.0
    }

    pub fn inverse(&self) -> f64 {
        1.0 / self.0
    }

    pub fn unit() -> Self {
        Temperature(1.0)
    }
}

impl TryFrom<f64> for Temperature {
    type Error = Error;
    fn try_from(tau: f64) -> Result<Self> {
        Temperature::new(tau)
    }
}

impl From<Temperature> for f64 {
    fn from(t: Temperature) -> f64 {
        t.0
    }
}

/// A point on the probability simplex: nonnegative entries summing to one
/// within [`SIMPLEX_SUM_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex(Vec<f64>);

impl Simplex {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidInput(
                "simplex entries must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidInput(format!(
                "simplex sum {sum} deviates from 1 by more than {SIMPLEX_SUM_TOL}"
            )));
        }
        Ok(Simplex(probs))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Simplex {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}
