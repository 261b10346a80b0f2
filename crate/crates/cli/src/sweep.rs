//! CSV rows of a bound sweep.

use crate::error::{CliError, CliResult};
use qcert_core::sdp::SdpStatus;

pub const SWEEP_HEADER: &str = "p,bound,status,gap";

/// One grid point; `bound` is empty unless the solver reached an optimum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub p: f64,
    pub bound: Option<f64>,
    pub status: SdpStatus,
    pub gap: f64,
}

fn status_name(s: SdpStatus) -> &'static str {
    match s {
        SdpStatus::Optimal => "optimal",
        SdpStatus::Infeasible => "infeasible",
        SdpStatus::MaxIter => "max_iter",
        SdpStatus::NumericalFailure => "numerical_failure",
    }
}

fn parse_status(s: &str) -> CliResult<SdpStatus> {
    Ok(match s {
        "optimal" => SdpStatus::Optimal,
        "infeasible" => SdpStatus::Infeasible,
        "max_iter" => SdpStatus::MaxIter,
        "numerical_failure" => SdpStatus::NumericalFailure,
        other => return Err(CliError::input(format!("unknown solver status `{other}`"))),
    })
}

/// Shortest decimal that parses back to `v`, with an exponent for very small or large magnitudes.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        serde_json::to_string(&v).expect("finite floats serialize")
    } else {
        v.to_string()
    }
}

impl SweepRow {
    pub fn to_csv(&self) -> String {
        let bound = self.bound.map(fmt_num).unwrap_or_default();
        format!("{},{bound},{},{}", fmt_num(self.p), status_name(self.status), fmt_num(self.gap))
    }

    pub fn parse(line: &str) -> CliResult<Self> {
        let cols: Vec<&str> = line.split(',').collect();
        let [p, bound, status, gap] = cols.as_slice() else {
            return Err(CliError::input(format!("sweep row `{line}` does not have four columns")));
        };
        let num = |t: &str| t.parse::<f64>().map_err(|_| CliError::input(format!("`{t}` in sweep row `{line}` is not a number")));
        Ok(Self {
            p: num(p)?,
            bound: if bound.is_empty() { None } else { Some(num(bound)?) },
            status: parse_status(status)?,
            gap: num(gap)?,
        })
    }
}

/// Reads a sweep file, header included.
pub fn parse_sweep(text: &str) -> CliResult<Vec<SweepRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(SWEEP_HEADER) {
        return Err(CliError::input(format!("sweep file must start with `{SWEEP_HEADER}`")));
    }
    lines.filter(|l| !l.is_empty()).map(SweepRow::parse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_round_trip() {
        for row in [
            SweepRow { p: 0.15, bound: Some(0.3625000000012), status: SdpStatus::Optimal, gap: 1.2e-10 },
            SweepRow { p: 1.0, bound: None, status: SdpStatus::MaxIter, gap: 0.5 },
            SweepRow { p: 0.5, bound: Some(0.0), status: SdpStatus::NumericalFailure, gap: f64::INFINITY },
        ] {
            let line = row.to_csv();
            assert_eq!(SweepRow::parse(&line).unwrap(), row);
            assert_eq!(SweepRow::parse(&line).unwrap().to_csv(), line);
        }
        assert_eq!(SweepRow { p: 0.15, bound: None, status: SdpStatus::Infeasible, gap: 0.0 }.to_csv(), "0.15,,infeasible,0.0");
    }
}
