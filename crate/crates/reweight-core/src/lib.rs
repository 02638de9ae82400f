//! Reweighting functions that map score vectors onto the probability
//! simplex: temperature softmax, MultiMax (softmax of a learnable
//! piecewise-polynomial modulation of the input), sparsemax, entmax-1.5 and
//! ev-softmax, together with exact forward evaluation and analytic
//! vector-Jacobian products.
//!
//! ```
//! use reweight_core::{multimax, softmax, ModulatorParams, Scores, Temperature};
//!
//! let x = Scores::new(vec![3.0, 2.8, -1.0])?;
//! let p = softmax(&x, Temperature::new(1.0)?)?;
//! assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
//!
//! // The identity modulator reduces MultiMax to unit-temperature softmax.
//! let q = multimax(&x, &ModulatorParams::identity(2))?;
//! assert!((p.as_slice()[0] - q.as_slice()[0]).abs() < 1e-12);
//! # Ok::<(), reweight_core::Error>(())
//! ```
//!
//! All operations are pure functions of their arguments; values are safe to
//! share or move across threads.

pub mod dispatch;
pub mod error;
pub mod functions;
pub mod modulator;
pub mod rng;
pub mod types;
pub mod vjp;

pub use dispatch::{reweight, ReweightSpec};
pub use error::{Error, Result};
pub use functions::{entmax15, ev_softmax, multimax, softmax, sparsemax};
pub use modulator::{
    flop_count, flop_ops, modulate, modulator_derivative, FlopKind, ModulatorParams, OrderParams,
};
pub use types::{Scores, Simplex, Temperature, SIMPLEX_SUM_TOL};
pub use vjp::{vjp, ModulatorGrads, Vjp};
