//! Semi-implicit projection integrator for the forced system and the
//! quantities derived from a completed run.

mod output;
mod params;
mod solver;
mod source;

pub use output::{write_trajectory, TrajectorySidecar};
pub use params::Params;
pub use solver::{
    absorption, cfl_limit, extract_ut_from, momentum_rhs, recover_pressure, solve_direct, step, v0_formula,
    EnergySample, SolverOptions, StepState, Trajectory, UtSample,
};
pub use source::{AuxForcing, SourceProfile, TimeProfile};

use crate::error::Result;
use crate::fields::VectorField;

/// `u_t(., T)` of a run from the momentum balance, together with the
/// backward-difference cross-check.
#[derive(Clone, Debug)]
pub struct UtExtraction {
    pub v: VectorField,
    pub difference: Option<VectorField>,
    pub discrepancy: Option<f64>,
    pub warning: bool,
}

/// Recompute `u_t(., T)` from the final state of `traj`.
pub fn extract_ut(traj: &Trajectory, src: &SourceProfile) -> Result<UtExtraction> {
    let v = extract_ut_from(
        traj.u_final(),
        traj.grad_p_final(),
        traj.params.t_final,
        &traj.params,
        src,
        &traj.options,
    )?;
    let discrepancy = traj.v_difference.as_ref().map(|d| (&v - d).l2());
    let warning = discrepancy.is_some_and(|d| d > traj.options.ut_warn_threshold * v.l2().max(f64::MIN_POSITIVE));
    Ok(UtExtraction {
        v,
        difference: traj.v_difference.clone(),
        discrepancy,
        warning,
    })
}
