use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::params::Params;
use super::solver::{SolverOptions, Trajectory};
use crate::error::Result;
use crate::fields::io::write_vector;

/// JSON companion of the snapshot files of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySidecar {
    pub dim: usize,
    pub n: usize,
    pub params: Params,
    pub options: SolverOptions,
    pub dt: f64,
    pub steps: usize,
    pub snapshot_stride: usize,
    pub times: Vec<f64>,
    pub energy_t: Vec<f64>,
    pub energy_h_sq: Vec<f64>,
    pub energy_v_sq: Vec<f64>,
    pub energy_lr1: Vec<f64>,
    pub energy_ut_h_sq: Vec<f64>,
    pub ut_t: Vec<f64>,
    pub ut_h_sq: Vec<f64>,
    pub ut_v_sq: Vec<f64>,
    pub max_divergence: f64,
    pub ut_discrepancy: Option<f64>,
    pub ut_warning: bool,
    pub u_files: Vec<String>,
    pub grad_p_files: Vec<String>,
    pub v_final_file: String,
}

impl TrajectorySidecar {
    pub fn from_trajectory(traj: &Trajectory, prefix: &str) -> Self {
        let e = &traj.energy_samples;
        let names = |kind: &str| (0..traj.times.len()).map(|k| format!("{prefix}_{kind}_{k:05}.cbf")).collect();
        TrajectorySidecar {
            dim: traj.grid.dim(),
            n: traj.grid.n(),
            params: traj.params,
            options: traj.options,
            dt: traj.dt,
            steps: traj.steps,
            snapshot_stride: traj.snapshot_stride,
            times: traj.times.clone(),
            energy_t: e.iter().map(|s| s.t).collect(),
            energy_h_sq: e.iter().map(|s| s.h_sq).collect(),
            energy_v_sq: e.iter().map(|s| s.v_sq).collect(),
            energy_lr1: e.iter().map(|s| s.lr1).collect(),
            energy_ut_h_sq: e.iter().map(|s| s.ut_h_sq).collect(),
            ut_t: traj.ut_samples.iter().map(|s| s.t).collect(),
            ut_h_sq: traj.ut_samples.iter().map(|s| s.h_sq).collect(),
            ut_v_sq: traj.ut_samples.iter().map(|s| s.v_sq).collect(),
            max_divergence: traj.max_divergence,
            ut_discrepancy: traj.ut_discrepancy,
            ut_warning: traj.ut_warning,
            u_files: names("u"),
            grad_p_files: names("gradp"),
            v_final_file: format!("{prefix}_ut_final.cbf"),
        }
    }
}

/// Write every snapshot as CBF1 plus the JSON sidecar; returns the paths
/// written, sidecar last.
pub fn write_trajectory(traj: &Trajectory, dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let side = TrajectorySidecar::from_trajectory(traj, prefix);
    let mut written = Vec::new();
    for (k, name) in side.u_files.iter().enumerate() {
        let p = dir.join(name);
        write_vector(&p, &traj.u[k])?;
        written.push(p);
    }
    for (k, name) in side.grad_p_files.iter().enumerate() {
        let p = dir.join(name);
        write_vector(&p, &traj.grad_p[k])?;
        written.push(p);
    }
    let p = dir.join(&side.v_final_file);
    write_vector(&p, &traj.v_final)?;
    written.push(p);
    let p = dir.join(format!("{prefix}.json"));
    std::fs::write(&p, serde_json::to_string_pretty(&side)?)?;
    written.push(p);
    Ok(written)
}
