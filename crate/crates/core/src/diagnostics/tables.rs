//! Plot tables: one row per step or per perturbation magnitude.

use serde::Serialize;

use super::energy::EnergyReport;
use super::stability::ScalingRow;
use crate::error::{CbfError, Result};

#[derive(Serialize)]
struct EnergyRow {
    step: usize,
    t: f64,
    h_sq: f64,
    v_sq: f64,
    lr1: f64,
    ut_h_sq: f64,
    energy_lhs: f64,
    energy_rhs: f64,
    energy_slack: f64,
}

/// Column names and meanings of every emitted table.
pub const SCHEMA: &[(&str, &[(&str, &str)])] = &[
    (
        "energy.csv",
        &[
            ("step", "time-step index, 0 is the initial state"),
            ("t", "time"),
            ("h_sq", "||u||_H^2"),
            ("v_sq", "||u||_V^2"),
            ("lr1", "||u||_{L^{r+1}}^{r+1}"),
            ("ut_h_sq", "||u_t||_H^2 from the step difference quotient"),
            ("energy_lhs", "energy estimate left side up to t"),
            ("energy_rhs", "energy estimate bound up to t"),
            ("energy_slack", "energy_rhs - energy_lhs"),
        ],
    ),
    (
        "scaling.csv",
        &[
            ("delta", "relative perturbation of g"),
            ("lhs", "solution and source difference norms"),
            ("rhs_data", "data difference norms"),
            ("implied_c", "lhs / rhs_data, empty for the exact-zero case"),
        ],
    ),
    (
        "reconstruction.csv",
        &[
            ("iteration", "fixed-point iteration, starting at 1"),
            ("residual", "||f_k - f_{k-1}||_{L^2}"),
            ("ball_norm", "||f_k||_{L^2}"),
            ("error", "||f_k - f_true||_{L^2} / ||f_true||_{L^2}, empty without a truth"),
        ],
    ),
];

fn to_string(mut w: csv::Writer<Vec<u8>>) -> Result<String> {
    w.flush()?;
    let bytes = w.into_inner().map_err(|e| CbfError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CbfError::Format(e.to_string()))
}

fn csv_err(e: csv::Error) -> CbfError {
    CbfError::Format(format!("csv: {e}"))
}

pub fn energy_csv(report: &EnergyReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for k in 0..report.t.len() {
        w.serialize(EnergyRow {
            step: k,
            t: report.t[k],
            h_sq: report.h_sq[k],
            v_sq: report.v_sq[k],
            lr1: report.lr1[k],
            ut_h_sq: report.ut_h_sq[k],
            energy_lhs: report.energy.lhs[k],
            energy_rhs: report.energy.rhs[k],
            energy_slack: report.energy.slack[k],
        })
        .map_err(csv_err)?;
    }
    to_string(w)
}

pub fn scaling_csv(rows: &[ScalingRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    to_string(w)
}

#[derive(Serialize)]
struct ReconstructionRow {
    iteration: usize,
    residual: f64,
    ball_norm: f64,
    error: Option<f64>,
}

/// `errors[k]` belongs to iterate `k + 1`.
pub fn reconstruction_csv(residuals: &[f64], ball_norms: &[f64], errors: Option<&[f64]>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (k, res) in residuals.iter().enumerate() {
        w.serialize(ReconstructionRow {
            iteration: k + 1,
            residual: *res,
            ball_norm: ball_norms.get(k + 1).copied().unwrap_or(f64::NAN),
            error: errors.and_then(|e| e.get(k).copied()),
        })
        .map_err(csv_err)?;
    }
    to_string(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_header_matches_schema() {
        let rows = [ScalingRow {
            delta: 0.01,
            lhs: 1.0,
            rhs_data: 2.0,
            implied_c: Some(0.5),
        }];
        let text = scaling_csv(&rows).unwrap();
        let header = text.lines().next().unwrap();
        let expected: Vec<&str> = SCHEMA[1].1.iter().map(|c| c.0).collect();
        assert_eq!(header, expected.join(","));
        assert_eq!(text.lines().nth(1).unwrap(), "0.01,1.0,2.0,0.5");
    }
}
