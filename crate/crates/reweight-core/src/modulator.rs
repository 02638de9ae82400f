//! The piecewise-polynomial input modulator behind MultiMax.
//!
//! For parameters {b_n, d_n, t_b_n, t_d_n} over orders n = 1..N (N <= 2):
//!
//! ```text
//! sigma(x) = x + sum_n (1 - t_b_n) * max(b_n - x, 0)^n
//!              + sum_n (t_d_n - 1) * max(x - d_n, 0)^n
//! ```
//!
//! Below b_n the effective slope steepens or flattens according to t_b_n,
//! above d_n according to t_d_n, and the bias terms keep sigma continuous for
//! every parameter setting. Parameters are deliberately unconstrained: no
//! ordering between b and d, no sign restriction on the temperatures, so
//! sigma is not necessarily monotone.

use crate::error::{Error, Result};
use crate::types::Scores;
use serde::{Deserialize, Serialize};

/// Breakpoints and temperature factors for one polynomial order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderParams {
    /// Low-side breakpoint.
    pub b: f64,
    /// High-side breakpoint.
    pub d: f64,
    /// Temperature factor applied below `b`.
    pub t_b: f64,
    /// Temperature factor applied above `d`.
    pub t_d: f64,
}

impl OrderParams {
    pub fn identity() -> Self {
        OrderParams {
            b: 0.0,
            d: 0.0,
            t_b: 1.0,
            t_d: 1.0,
        }
    }
}

/// Full modulator parameter set: one [`OrderParams`] per order, at most two
/// orders.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatorParams {
    orders: Vec<OrderParams>,
}

impl ModulatorParams {
    pub fn new(orders: Vec<OrderParams>) -> Result<Self> {
        if orders.is_empty() || orders.len() > 2 {
            return Err(Error::InvalidInput(format!(
                "modulator supports 1 or 2 orders, got {}",
                orders.len()
            )));
        }
        for o in &orders {
            for v in [o.b, o.d, o.t_b, o.t_d] {
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "non-finite modulator parameter {v}"
                    )));
                }
            }
        }
        Ok(ModulatorParams { orders })
    }

    /// First-order parameters.
    pub fn first_order(b: f64, d: f64, t_b: f64, t_d: f64) -> Result<Self> {
        Self::new(vec![OrderParams { b, d, t_b, t_d }])
    }

    /// Identity modulator of the given order count: sigma(x) = x exactly.
    pub fn identity(orders: usize) -> Self {
        ModulatorParams {
            orders: vec![OrderParams::identity(); orders.clamp(1, 2)],
        }
    }

    /// Parameters that reduce sigma to elementwise max(x, 0).
    pub fn relu() -> Self {
        ModulatorParams {
            orders: vec![OrderParams {
                b: 0.0,
                d: 0.0,
                t_b: 0.0,
                t_d: 1.0,
            }],
        }
    }

    pub fn orders(&self) -> &[OrderParams] {
        &self.orders
    }

    pub fn orders_mut(&mut self) -> &mut [OrderParams] {
        &mut self.orders
    }

    pub fn num_orders(&self) -> usize {
        self.orders.len()
    }

    /// All breakpoint locations, used by tests that must avoid kinks.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.orders.iter().flat_map(|o| [o.b, o.d]).collect()
    }

    /// sigma at a single point.
    pub fn apply_scalar(&self, x: f64) -> f64 {
        let mut y = x;
        for (i, o) in self.orders.iter().enumerate() {
            let n = (i + 1) as i32;
            y += (1.0 - o.t_b) * (o.b - x).max(0.0).powi(n);
            y += (o.t_d - 1.0) * (x - o.d).max(0.0).powi(n);
        }
        y
    }

    /// d sigma / d x at a single point. At a first-order breakpoint the
    /// subgradient 1 (the middle-branch slope) is returned, which here means
    /// the kink terms contribute nothing exactly at b or d.
    pub fn derivative_scalar(&self, x: f64) -> f64 {
        let mut g = 1.0;
        for (i, o) in self.orders.iter().enumerate() {
            let n = (i + 1) as f64;
            if x < o.b {
                g -= (1.0 - o.t_b) * n * (o.b - x).powi(i as i32);
            }
            if x > o.d {
                g += (o.t_d - 1.0) * n * (x - o.d).powi(i as i32);
            }
        }
        g
    }

    /// Partial derivatives of sigma(x) with respect to the parameters of each
    /// order, as (d/dt_b, d/dt_d, d/db, d/dd) tuples. Exactly at a breakpoint
    /// the b/d partials use the inactive branch, matching the subgradient
    /// convention of [`Self::derivative_scalar`].
    pub fn param_partials_scalar(&self, x: f64) -> Vec<(f64, f64, f64, f64)> {
        self.orders
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let n = (i + 1) as f64;
                let dt_b = -(o.b - x).max(0.0).powi(i as i32 + 1);
                let dt_d = (x - o.d).max(0.0).powi(i as i32 + 1);
                let db = if x < o.b {
                    (1.0 - o.t_b) * n * (o.b - x).powi(i as i32)
                } else {
                    0.0
                };
                let dd = if x > o.d {
                    -(o.t_d - 1.0) * n * (x - o.d).powi(i as i32)
                } else {
                    0.0
                };
                (dt_b, dt_d, db, dd)
            })
            .collect()
    }
}

/// Elementwise sigma over a score vector.
pub fn modulate(x: &Scores, params: &ModulatorParams) -> Result<Scores> {
    let out: Vec<f64> = x
        .as_slice()
        .iter()
        .map(|&v| params.apply_scalar(v))
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure(
            "modulator output overflowed".into(),
        ));
    }
    Scores::new(out)
}

/// Elementwise d sigma / d x over a score vector.
pub fn modulator_derivative(x: &Scores, params: &ModulatorParams) -> Result<Scores> {
    let out: Vec<f64> = x
        .as_slice()
        .iter()
        .map(|&v| params.derivative_scalar(v))
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure(
            "modulator derivative overflowed".into(),
        ));
    }
    Scores::new(out)
}

/// One elementwise floating point operation of the modulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlopKind {
    Sub,
    Max,
    Mul,
    Add,
}

/// Symbolic per-scalar operation list for an N-order modulator, following the
/// cost model used for the published count: per order, two subtractions
/// (b - x and x - d), two max-with-zero, two multiplications by the
/// temperature coefficients, and one addition combining the two terms; plus a
/// single residual addition of x at the end.
pub fn flop_ops(order: u32) -> Result<Vec<FlopKind>> {
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidInput(format!(
            "unsupported modulator order {order} (expected 1 or 2)"
        )));
    }
    let mut ops = Vec::new();
    for _ in 0..order {
        ops.extend([
            FlopKind::Sub,
            FlopKind::Sub,
            FlopKind::Max,
            FlopKind::Max,
            FlopKind::Mul,
            FlopKind::Mul,
            FlopKind::Add,
        ]);
    }
    ops.push(FlopKind::Add); // residual x
    Ok(ops)
}

/// Extra floating point operations per scalar input for an N-order modulator.
pub fn flop_count(order: u32) -> Result<u32> {
    Ok(flop_ops(order)?.len() as u32)
}

// Serde representation matching the on-disk parameter schema:
// {"tb": [...], "td": [...], "b": [...], "d": [...]}, one array entry per
// order.
#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    tb: Vec<f64>,
    td: Vec<f64>,
    b: Vec<f64>,
    d: Vec<f64>,
}

impl Serialize for ModulatorParams {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = ParamsRepr {
            tb: self.orders.iter().map(|o| o.t_b).collect(),
            td: self.orders.iter().map(|o| o.t_d).collect(),
            b: self.orders.iter().map(|o| o.b).collect(),
            d: self.orders.iter().map(|o| o.d).collect(),
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModulatorParams {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = ParamsRepr::deserialize(de)?;
        let n = repr.tb.len();
        if repr.td.len() != n || repr.b.len() != n || repr.d.len() != n {
            return Err(serde::de::Error::custom(
                "tb/td/b/d arrays must have equal length",
            ));
        }
        let orders = (0..n)
            .map(|i| OrderParams {
                b: repr.b[i],
                d: repr.d[i],
                t_b: repr.tb[i],
                t_d: repr.td[i],
            })
            .collect();
        ModulatorParams::new(orders).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: &[f64]) -> Scores {
        Scores::from_slice(v).unwrap()
    }

    /// First-order piecewise form: t_b x + (1-t_b) b below b, x in the
    /// middle, t_d x + (1-t_d) d above d. Independent of the compact form.
    fn piecewise_first_order(x: f64, o: &OrderParams) -> f64 {
        if x < o.b {
            o.t_b * x + (1.0 - o.t_b) * o.b
        } else if x > o.d {
            o.t_d * x + (1.0 - o.t_d) * o.d
        } else {
            x
        }
    }

    #[test]
    fn identity_params_leave_input_unchanged() {
        let p = ModulatorParams::identity(2);
        let x = scores(&[-3.0, -0.5, 0.0, 1.7, 9.0]);
        let y = modulate(&x, &p).unwrap();
        assert_eq!(x.as_slice(), y.as_slice());
    }

    #[test]
    fn relu_params_reduce_to_max_with_zero() {
        let p = ModulatorParams::relu();
        let x = scores(&[-2.0, 3.0, -0.0, 0.25]);
        let y = modulate(&x, &p).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 3.0, 0.0, 0.25]);
    }

    #[test]
    fn compact_and_piecewise_forms_agree_first_order() {
        let o = OrderParams {
            b: -1.0,
            d: 1.0,
            t_b: 2.0,
            t_d: 0.5,
        };
        let p = ModulatorParams::new(vec![o]).unwrap();
        assert_eq!(p.apply_scalar(-2.0), -3.0);
        assert_eq!(p.apply_scalar(3.0), 2.0);
        for i in -40..=40 {
            let x = i as f64 * 0.1;
            let compact = p.apply_scalar(x);
            let piecewise = piecewise_first_order(x, &o);
            assert!(
                (compact - piecewise).abs() < 1e-14,
                "forms disagree at {x}: {compact} vs {piecewise}"
            );
        }
    }

    #[test]
    fn derivative_is_one_at_first_order_breakpoint() {
        let p = ModulatorParams::relu();
        let x = scores(&[0.0, 0.0]);
        let g = modulator_derivative(&x, &p).unwrap();
        assert_eq!(g.as_slice(), &[1.0, 1.0]);

        let q = ModulatorParams::first_order(-1.0, 1.0, 3.0, 0.25).unwrap();
        assert_eq!(q.derivative_scalar(-1.0), 1.0);
        assert_eq!(q.derivative_scalar(1.0), 1.0);
        assert_eq!(q.derivative_scalar(-1.5), 3.0);
        assert_eq!(q.derivative_scalar(1.5), 0.25);
        assert_eq!(q.derivative_scalar(0.0), 1.0);
    }

    #[test]
    fn identity_derivative_is_all_ones() {
        let p = ModulatorParams::identity(2);
        let x = scores(&[-4.0, 0.0, 2.5]);
        let g = modulator_derivative(&x, &p).unwrap();
        assert_eq!(g.as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn second_order_derivative_continuous_at_breakpoints() {
        // Only n=2 active: first order is identity.
        let p = ModulatorParams::new(vec![
            OrderParams::identity(),
            OrderParams {
                b: 0.7,
                d: -0.3,
                t_b: 2.5,
                t_d: 0.1,
            },
        ])
        .unwrap();
        for bp in [0.7, -0.3] {
            let eps = 1e-12;
            let left = p.derivative_scalar(bp - eps);
            let mid = p.derivative_scalar(bp);
            let right = p.derivative_scalar(bp + eps);
            assert!((left - mid).abs() < 1e-9, "left {left} vs mid {mid}");
            assert!((right - mid).abs() < 1e-9, "right {right} vs mid {mid}");
        }
    }

    #[test]
    fn continuity_at_breakpoints_for_random_params() {
        // Drift of a continuous sigma across [beta - delta, beta + delta] is
        // bounded by max-slope * 2 delta, so the draw ranges are chosen to
        // keep that envelope under the 1e-8 tolerance; a genuine jump from a
        // wrong bias term would exceed it by orders of magnitude.
        let mut rng = crate::rng::SplitMix64::new(11);
        for _ in 0..2000 {
            let p = ModulatorParams::new(vec![
                OrderParams {
                    b: rng.uniform(-1.0, 1.0),
                    d: rng.uniform(-1.0, 1.0),
                    t_b: rng.uniform(0.0, 2.0),
                    t_d: rng.uniform(0.0, 2.0),
                },
                OrderParams {
                    b: rng.uniform(-1.0, 1.0),
                    d: rng.uniform(-1.0, 1.0),
                    t_b: rng.uniform(0.5, 1.5),
                    t_d: rng.uniform(0.5, 1.5),
                },
            ])
            .unwrap();
            let delta = 1e-9;
            for bp in p.breakpoints() {
                let lo = p.apply_scalar(bp - delta);
                let hi = p.apply_scalar(bp + delta);
                let mid = p.apply_scalar(bp);
                let tol = 1e-8 * (1.0 + mid.abs());
                assert!(
                    (hi - lo).abs() <= tol,
                    "discontinuity at {bp}: {lo} vs {hi} (params {p:?})"
                );
            }
        }
    }

    /// Layer 12 of the published vision-transformer parameters: steep below,
    /// flat above.
    #[test]
    fn published_layer12_derivative_signs() {
        let p = ModulatorParams::new(vec![
            OrderParams {
                b: 1.6852132,
                d: -0.04795134,
                t_b: 0.16383016,
                t_d: 0.25565386,
            },
            OrderParams {
                b: 0.9796309,
                d: 2.1836245,
                t_b: 3.2074118,
                t_d: 0.99102634,
            },
        ])
        .unwrap();
        assert!(p.derivative_scalar(-4.0) > 1.0);
        assert!(p.derivative_scalar(4.0) < 1.0);
    }

    #[test]
    fn flop_count_matches_op_model() {
        assert_eq!(flop_count(2).unwrap(), 15);
        assert_eq!(flop_count(1).unwrap(), 8);
        assert!(matches!(flop_count(0), Err(Error::InvalidInput(_))));
        assert!(matches!(flop_count(3), Err(Error::InvalidInput(_))));
        // Seven ops per order: 2 sub, 2 max, 2 mul, 1 add -- plus the residual.
        let ops = flop_ops(2).unwrap();
        assert_eq!(ops.iter().filter(|o| **o == FlopKind::Sub).count(), 4);
        assert_eq!(ops.iter().filter(|o| **o == FlopKind::Max).count(), 4);
        assert_eq!(ops.iter().filter(|o| **o == FlopKind::Mul).count(), 4);
        assert_eq!(ops.iter().filter(|o| **o == FlopKind::Add).count(), 3);
    }

    #[test]
    fn json_schema_round_trip() {
        let p = ModulatorParams::new(vec![
            OrderParams {
                b: 1.5,
                d: -0.25,
                t_b: 0.5,
                t_d: 2.0,
            },
            OrderParams {
                b: 0.0,
                d: 3.0,
                t_b: -1.0,
                t_d: 0.9,
            },
        ])
        .unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"tb\":[0.5,-1.0]"), "unexpected json {json}");
        let back: ModulatorParams = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);

        let bad = r#"{"tb":[1.0],"td":[1.0,2.0],"b":[0.0],"d":[0.0]}"#;
        assert!(serde_json::from_str::<ModulatorParams>(bad).is_err());
    }

    #[test]
    fn rejects_nonfinite_and_bad_order_counts() {
        assert!(ModulatorParams::new(vec![]).is_err());
        assert!(ModulatorParams::new(vec![OrderParams::identity(); 3]).is_err());
        assert!(ModulatorParams::first_order(f64::NAN, 0.0, 1.0, 1.0).is_err());
    }
}
