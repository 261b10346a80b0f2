//! `start:stop:step` parameter grids.

use crate::error::{CliError, CliResult};

/// Points closer than this to `stop` count as reaching it.
pub const ENDPOINT_TOL: f64 = 1e-12;

/// Inclusive grid `start, start+step, …, stop`. Points are snapped to twelve
/// decimals so that `0:1:0.05` yields `0.15` rather than `0.15000000000000002`.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(CliError::input(format!("grid `{s}` is not start:stop:step")));
    };
    let num = |t: &str| -> CliResult<f64> {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CliError::input(format!("grid `{s}`: `{t}` is not a finite number")))
    };
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if step <= 0.0 {
        return Err(CliError::input(format!("grid `{s}`: step must be positive")));
    }
    if stop < start - ENDPOINT_TOL {
        return Err(CliError::input(format!("grid `{s}`: stop is below start")));
    }
    let n = ((stop - start) / step + ENDPOINT_TOL / step).floor() as usize + 1;
    if n > 1_000_000 {
        return Err(CliError::input(format!("grid `{s}` has {n} points")));
    }
    Ok((0..n)
        .map(|i| {
            let v = start + i as f64 * step;
            let v = if (v - stop).abs() <= ENDPOINT_TOL { stop } else { v };
            (v * 1e12).round() / 1e12
        })
        .collect())
}
