//! Grid specifications: `start:stop:step` (inclusive linear sweep) with an
//! optional `:log` suffix turning `step` into a multiplicative factor.

use crate::errors::{CliError, CliResult};

pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let (nums, log) = match parts.as_slice() {
        [a, b, c] => (vec![*a, *b, *c], false),
        [a, b, c, "log"] => (vec![*a, *b, *c], true),
        _ => {
            return Err(CliError::Usage(format!(
                "grid must be start:stop:step or start:stop:factor:log, got {spec:?}"
            )))
        }
    };
    let vals: Vec<f64> = nums
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("cannot parse grid number {s:?}")))
        })
        .collect::<CliResult<_>>()?;
    let (start, stop, step) = (vals[0], vals[1], vals[2]);
    if !start.is_finite() || !stop.is_finite() || !step.is_finite() {
        return Err(CliError::Usage("grid bounds must be finite".into()));
    }
    if stop < start {
        return Err(CliError::Usage(format!(
            "grid stop {stop} below start {start}"
        )));
    }

    let mut out = Vec::new();
    if log {
        if start <= 0.0 || step <= 1.0 {
            return Err(CliError::Usage(
                "log grid needs start > 0 and factor > 1".into(),
            ));
        }
        let mut v = start;
        while v <= stop * (1.0 + 1e-12) {
            out.push(v);
            v *= step;
        }
    } else {
        if step <= 0.0 {
            return Err(CliError::Usage(format!(
                "grid step must be positive, got {step}"
            )));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        for i in 0..=n {
            out.push(start + i as f64 * step);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("grid produced no points".into()));
    }
    Ok(out)
}

/// Comma-separated reals, e.g. an input vector.
pub fn parse_reals(spec: &str) -> CliResult<Vec<f64>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("cannot parse number {:?}", s.trim())))
        })
        .collect()
}
