use super::data::OverdeterminationData;
use super::operators::ForwardModel;
use crate::direct::{solve_direct, Params, SolverOptions, SourceProfile, TimeProfile};
use crate::error::{CbfError, Result, ResultExt};
use crate::fields::transfer::{restrict_scalar, restrict_vector};
use crate::fields::{gradient, Grid, VectorField};

/// Synthetic measurements with the coarse forward model that inverts them.
#[derive(Clone, Debug)]
pub struct TwinExperiment {
    pub data: OverdeterminationData,
    pub model: ForwardModel,
    /// Truth sampled on the coarse grid.
    pub f_true: VectorField,
    /// Refinement factor of the data-generating run in space and time.
    pub factor: usize,
}

/// Generate final-time data from a run `factor` times finer in space and
/// time, started from rest, and restrict it to `coarse`.
pub fn synthetic_twin(
    coarse: Grid,
    factor: usize,
    params: &Params,
    g: TimeProfile,
    f_true: impl Fn(&Grid) -> Result<VectorField>,
    options: &SolverOptions,
) -> Result<TwinExperiment> {
    if factor < 2 {
        return Err(CbfError::Parameter(format!(
            "synthetic data need at least 2x refinement, got {factor}"
        )));
    }
    let fine = coarse.refined(factor)?;
    let fine_params = params.with_dt(params.effective_dt() / factor as f64);
    let src = SourceProfile::new(f_true(&fine)?, g.clone())?;
    let steps = fine_params.steps();
    let traj = solve_direct(&VectorField::zeros(fine), &fine_params, &src, steps, options)
        .with_context(|| "fine data-generating run".into())?;
    let phi = restrict_vector(traj.u_final(), coarse)?;
    let psi = restrict_scalar(&traj.p_final, coarse)?;
    let g_at_t = g.at(&coarse, params.t_final);
    let floor = g_at_t.min_abs();
    let data = OverdeterminationData::new(phi, gradient(&psi), g_at_t, floor)?;
    let mut model = ForwardModel::new(VectorField::zeros(coarse), *params, g);
    model.options = *options;
    Ok(TwinExperiment {
        data,
        model,
        f_true: f_true(&coarse)?,
        factor,
    })
}
