use super::data::OverdeterminationData;
use crate::direct::{absorption, solve_direct, AuxForcing, Params, SolverOptions, SourceProfile, TimeProfile};
use crate::error::{Result, ResultExt};
use crate::fields::{advect, laplacian, leray_project, VectorField};

/// Everything except `f` needed to run the direct problem.
#[derive(Clone, Debug)]
pub struct ForwardModel {
    pub u0: VectorField,
    pub params: Params,
    pub g: TimeProfile,
    pub aux: Option<AuxForcing>,
    pub options: SolverOptions,
}

impl ForwardModel {
    pub fn new(u0: VectorField, params: Params, g: TimeProfile) -> Self {
        ForwardModel {
            u0,
            params,
            g,
            aux: None,
            options: SolverOptions::default(),
        }
    }

    pub fn source(&self, f: VectorField) -> Result<SourceProfile> {
        let s = SourceProfile::new(f, self.g.clone())?;
        Ok(match &self.aux {
            Some(a) => s.with_aux(a.clone()),
            None => s,
        })
    }
}

/// `A f = u_t(., T)` of the direct solution driven by `f g`.
pub fn apply_a(f: &VectorField, model: &ForwardModel) -> Result<VectorField> {
    let src = model.source(f.clone())?;
    let steps = model.params.steps();
    let traj = solve_direct(&model.u0, &model.params, &src, steps, &model.options)
        .with_context(|| "evaluating A f".into())?;
    Ok(traj.v_final)
}

/// The `f`-independent part of the numerator of `B`:
/// `(phi.grad)phi + grad psi - mu lap phi + alpha phi + beta |phi|^{r-1} phi - F_aux(T)`.
pub fn stationary_part(data: &OverdeterminationData, model: &ForwardModel) -> Result<VectorField> {
    data.validate()?;
    let p = &model.params;
    let phi = &data.phi;
    let mut out = data.grad_psi.clone();
    if model.options.advection {
        out += &advect(phi, phi)?;
    }
    out.axpy(-p.mu, &laplacian(phi));
    out += &absorption(phi, p, &model.options)?;
    if let Some(aux) = &model.aux {
        out -= &aux.at(phi.grid(), p.t_final);
    }
    Ok(out)
}

/// `(numerator) / g(., T)` on faces, refusing divisors below the floor.
pub fn divide_by_g(numerator: &VectorField, data: &OverdeterminationData) -> Result<VectorField> {
    numerator.div_scalar_field(&data.g_at_t, data.g_t_floor)
}

/// `B f = (A f + stationary part) / g(., T)`.
pub fn apply_b(f: &VectorField, data: &OverdeterminationData, model: &ForwardModel) -> Result<VectorField> {
    let mut num = stationary_part(data, model)?;
    num += &apply_a(f, model)?;
    divide_by_g(&num, data)
}

/// `B` with the `A` term removed: the default starting guess.
pub fn apply_b_stationary(data: &OverdeterminationData, model: &ForwardModel) -> Result<VectorField> {
    divide_by_g(&stationary_part(data, model)?, data)
}

/// Relative mismatch between the measured pressure gradient and the gradient
/// part of the momentum balance at `T` for a candidate source `f`.
pub fn pressure_data_discrepancy(f: &VectorField, data: &OverdeterminationData, model: &ForwardModel) -> Result<Option<f64>> {
    let norm = data.grad_psi.l2();
    if norm == 0.0 {
        return Ok(None);
    }
    let src = model.source(f.clone())?;
    let balance = crate::direct::momentum_rhs(&data.phi, model.params.t_final, &model.params, &src, &model.options)?;
    let grad_part = leray_project(&balance)?.grad_q;
    Ok(Some((&data.grad_psi - &grad_part).l2() / norm))
}
