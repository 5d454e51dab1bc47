use serde::{Deserialize, Serialize};

use super::data::OverdeterminationData;
use super::operators::{apply_b, apply_b_stationary, pressure_data_discrepancy, ForwardModel};
use crate::error::{CbfError, Result};
use crate::fields::{project, VectorField};

/// Iteration controls of the successive-approximation driver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointOptions {
    /// Relaxation weight in `(0, 1]`.
    pub omega: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Rescale iterates leaving the unit ball back onto its boundary.
    pub rescale_to_ball: bool,
    /// Proceed even though the admissibility check failed; recorded in the
    /// report.
    pub override_admissibility: bool,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            omega: 1.0,
            tol: 1e-8,
            max_iter: 50,
            rescale_to_ball: false,
            override_admissibility: false,
        }
    }
}

impl FixedPointOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(CbfError::Parameter(format!("omega must lie in (0, 1], got {}", self.omega)));
        }
        if !(self.tol > 0.0) {
            return Err(CbfError::Parameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(CbfError::Parameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructionReport {
    pub f_hat: VectorField,
    pub iterations: usize,
    /// `||f_{k+1} - f_k||` per iteration.
    pub residual_history: Vec<f64>,
    /// `||f_k||` for the initial guess and every iterate.
    pub ball_norms: Vec<f64>,
    /// Indices into `ball_norms` of iterates outside the unit ball.
    pub left_ball: Vec<usize>,
    /// `||f_hat - P B f_hat||`.
    pub fixed_point_defect: f64,
    /// `||f_hat - B f_hat||`, including the gradient content that the
    /// projection removes.
    pub raw_defect: f64,
    pub ball_norm: f64,
    pub converged: bool,
    pub admissibility_overridden: bool,
    pub rescaled: bool,
    /// Measured versus implied pressure gradient at `T`.
    pub pressure_data_discrepancy: Option<f64>,
    /// Set when a direct solve failed; the history is partial.
    pub failure: Option<String>,
}

/// Damped successive approximation `f_{k+1} = (1 - omega) f_k + omega P B f_k`.
///
/// `admissible` is the verdict of the admissibility check; a failing verdict
/// stops here unless the options override it. Direct-solver failures end the
/// iteration with `converged = false` and the partial history.
pub fn fixed_point_solve(
    data: &OverdeterminationData,
    model: &ForwardModel,
    opts: &FixedPointOptions,
    f_init: Option<VectorField>,
    admissible: bool,
) -> Result<ReconstructionReport> {
    fixed_point_solve_observed(data, model, opts, f_init, admissible, |_, _| {})
}

/// As [`fixed_point_solve`], calling `observe(k, f_k)` on every accepted
/// iterate, `k = 0` being the initial guess.
pub fn fixed_point_solve_observed(
    data: &OverdeterminationData,
    model: &ForwardModel,
    opts: &FixedPointOptions,
    f_init: Option<VectorField>,
    admissible: bool,
    mut observe: impl FnMut(usize, &VectorField),
) -> Result<ReconstructionReport> {
    opts.validate()?;
    data.validate()?;
    if !admissible && !opts.override_admissibility {
        return Err(CbfError::Parameter(
            "parameters fail the admissibility check; set override_admissibility to proceed".into(),
        ));
    }
    let mut f = match f_init {
        Some(f) => {
            data.grid().check_same(f.grid())?;
            f
        }
        None => project(&apply_b_stationary(data, model)?)?,
    };
    let mut rescaled = false;
    let mut ball = |f: &mut VectorField, norms: &mut Vec<f64>, left: &mut Vec<usize>| {
        let nf = f.l2();
        if nf > 1.0 {
            left.push(norms.len());
            if opts.rescale_to_ball {
                f.scale(1.0 / nf);
                rescaled = true;
            }
        }
        norms.push(nf);
    };
    let mut ball_norms = Vec::new();
    let mut left_ball = Vec::new();
    ball(&mut f, &mut ball_norms, &mut left_ball);
    observe(0, &f);

    let mut history = Vec::new();
    let mut converged = false;
    let mut failure = None;
    let mut last_pb: Option<VectorField> = None;
    for _ in 0..opts.max_iter {
        let pb = match apply_b(&f, data, model).and_then(|b| project(&b)) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        };
        let mut next = f.scaled(1.0 - opts.omega);
        next.axpy(opts.omega, &pb);
        let scale = f.l2().max(1.0);
        ball(&mut next, &mut ball_norms, &mut left_ball);
        let res = (&next - &f).l2();
        history.push(res);
        f = next;
        observe(history.len(), &f);
        last_pb = Some(pb);
        if res <= opts.tol * scale {
            converged = true;
            break;
        }
    }

    let (fixed_point_defect, raw_defect) = if failure.is_none() {
        match apply_b(&f, data, model) {
            Ok(b) => {
                let pb = project(&b)?;
                ((&f - &pb).l2(), (&f - &b).l2())
            }
            Err(e) => {
                failure = Some(e.to_string());
                (f64::NAN, f64::NAN)
            }
        }
    } else {
        let d = last_pb.map(|pb| (&f - &pb).l2()).unwrap_or(f64::NAN);
        (d, f64::NAN)
    };
    if failure.is_some() {
        converged = false;
    }
    let pressure = pressure_data_discrepancy(&f, data, model).ok().flatten();
    Ok(ReconstructionReport {
        ball_norm: f.l2(),
        f_hat: f,
        iterations: history.len(),
        residual_history: history,
        ball_norms,
        left_ball,
        fixed_point_defect,
        raw_defect,
        converged,
        admissibility_overridden: !admissible,
        rescaled,
        pressure_data_discrepancy: pressure,
        failure,
    })
}
