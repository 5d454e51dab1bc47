use serde::{Deserialize, Serialize};

use super::params::Params;
use super::source::SourceProfile;
use crate::error::{CbfError, Result, ResultExt};
use crate::fields::linalg::pcg;
use crate::fields::ops::{cell_magnitude, forchheimer_linear, power};
use crate::fields::helmholtz::helmholtz_solve;
use crate::fields::{
    advect, damping, divergence, gradient, h1_semi_sq, laplacian, leray_project, lp_pow, project, Grid, ScalarField,
    VectorField,
};

/// Switches and tolerances of the time integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Include the convective term.
    pub advection: bool,
    /// Include the Forchheimer term `beta |u|^{r-1} u`.
    pub forchheimer: bool,
    /// Advective Courant number limit, `dt <= cfl h / max|u|`.
    pub cfl: f64,
    /// Largest admissible number of steps.
    pub max_steps: usize,
    /// Relative residual tolerance of the implicit velocity solve.
    pub krylov_tol: f64,
    pub krylov_max_iter: usize,
    /// Relative residual-versus-difference gap in `u_t(T)` above which the
    /// trajectory carries a warning.
    pub ut_warn_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            advection: true,
            forchheimer: true,
            cfl: 0.5,
            max_steps: 1_000_000,
            krylov_tol: 1e-12,
            krylov_max_iter: 500,
            ut_warn_threshold: 0.1,
        }
    }
}

/// State carried between steps.
#[derive(Clone, Debug)]
pub struct StepState {
    pub t: f64,
    pub u: VectorField,
    /// Zero-mean pressure.
    pub p: ScalarField,
    pub grad_p: VectorField,
    /// `advect(u, u)` from the previous step, for Adams-Bashforth.
    pub adv_prev: Option<VectorField>,
    /// Krylov iterations of the last implicit solve.
    pub krylov_iterations: usize,
}

impl StepState {
    pub fn new(t: f64, u: VectorField, p: ScalarField) -> Self {
        let grad_p = gradient(&p);
        StepState {
            t,
            u,
            p,
            grad_p,
            adv_prev: None,
            krylov_iterations: 0,
        }
    }
}

fn beta_eff(params: &Params, opts: &SolverOptions) -> f64 {
    if opts.forchheimer {
        params.beta
    } else {
        0.0
    }
}

/// `alpha u + beta |u|^{r-1} u` honouring the option switches.
pub fn absorption(u: &VectorField, params: &Params, opts: &SolverOptions) -> Result<VectorField> {
    damping(u, params.r, beta_eff(params, opts), params.alpha)
}

/// `F(t) + mu lap u - (u.grad)u - D(u)`; the momentum balance without the
/// pressure term.
pub fn momentum_rhs(
    u: &VectorField,
    t: f64,
    params: &Params,
    src: &SourceProfile,
    opts: &SolverOptions,
) -> Result<VectorField> {
    let mut out = src.forcing(t);
    out.axpy(params.mu, &laplacian(u));
    if opts.advection {
        out -= &advect(u, u)?;
    }
    out -= &absorption(u, params, opts)?;
    Ok(out)
}

/// `u_t` from the momentum balance: the Leray projection of
/// `F + mu lap u - (u.grad)u - D(u) - grad p`.
pub fn extract_ut_from(
    u: &VectorField,
    grad_p: &VectorField,
    t: f64,
    params: &Params,
    src: &SourceProfile,
    opts: &SolverOptions,
) -> Result<VectorField> {
    let mut r = momentum_rhs(u, t, params, src, opts)?;
    r -= grad_p;
    project(&r).with_context(|| "u_t extraction".into())
}

/// Initial time derivative `P(mu lap u0 - (u0.grad)u0 - D(u0) + F(0))`.
pub fn v0_formula(u0: &VectorField, params: &Params, src: &SourceProfile, opts: &SolverOptions) -> Result<VectorField> {
    let r = momentum_rhs(u0, 0.0, params, src, opts)?;
    project(&r).with_context(|| "initial u_t".into())
}

/// Zero-mean pressure whose gradient is the gradient part of the momentum
/// balance at velocity `u`.
pub fn recover_pressure(
    u: &VectorField,
    t: f64,
    params: &Params,
    src: &SourceProfile,
    opts: &SolverOptions,
) -> Result<ScalarField> {
    let r = momentum_rhs(u, t, params, src, opts)?;
    Ok(leray_project(&r).with_context(|| "pressure recovery".into())?.q)
}

/// `(1 + dt alpha) v + dt beta L_S v - dt mu lap v` on interior faces, with
/// the Forchheimer coefficient `S = |u_n|^{r-1}` frozen.
struct ImplicitOperator {
    a0: f64,
    dt_beta: f64,
    dt_mu: f64,
    coeff: Vec<f64>,
    coeff_mean: f64,
}

impl ImplicitOperator {
    fn new(u_n: &VectorField, params: &Params, opts: &SolverOptions, dt: f64) -> Self {
        let dt_beta = dt * beta_eff(params, opts);
        let coeff: Vec<f64> = if dt_beta > 0.0 {
            cell_magnitude(u_n).into_iter().map(|m| power(m, params.r - 1.0)).collect()
        } else {
            Vec::new()
        };
        let coeff_mean = if coeff.is_empty() {
            1.0
        } else {
            coeff.iter().sum::<f64>() / coeff.len() as f64
        };
        ImplicitOperator {
            a0: 1.0 + dt * params.alpha,
            dt_beta,
            dt_mu: dt * params.mu,
            coeff,
            coeff_mean,
        }
    }

    fn apply(&self, v: &VectorField) -> VectorField {
        let mut out = v.scaled(self.a0);
        if self.dt_beta > 0.0 {
            out.axpy(self.dt_beta, &forchheimer_linear(v, &self.coeff));
        }
        out.axpy(-self.dt_mu, &laplacian(v));
        out.enforce_no_slip();
        out
    }

    /// Exact inverse of the operator with `S` replaced by its mean.
    fn precondition(&self, r: &VectorField) -> VectorField {
        helmholtz_solve(
            r,
            self.a0 + self.dt_beta,
            self.dt_beta * (self.coeff_mean - 1.0),
            self.dt_mu,
        )
    }
}

/// Largest stable step for the current velocity, if advection limits it.
pub fn cfl_limit(u: &VectorField, opts: &SolverOptions) -> Option<f64> {
    let umax = u.max_abs();
    if opts.advection && umax > 0.0 {
        Some(opts.cfl * u.grid().h() / umax)
    } else {
        None
    }
}

/// One projection step from `state.t` to `state.t + dt`.
///
/// The tentative velocity solves
/// `(1 + dt alpha) u* + dt beta L_S u* - dt mu lap u* = u_n + dt (F(t_{n+1}) - N_n - grad p_n)`
/// where `N_n` is the Adams-Bashforth extrapolation of the convective term
/// (explicit Euler on the first step). Its projection gives `u_{n+1}`; the
/// potential `q` of the removed gradient updates `p_{n+1} = p_n + q / dt`.
pub fn step(state: &StepState, params: &Params, src: &SourceProfile, opts: &SolverOptions, dt: f64) -> Result<StepState> {
    if let Some(limit) = cfl_limit(&state.u, opts) {
        if dt > limit {
            return Err(CbfError::Cfl { dt, suggested: limit });
        }
    }
    let t_next = state.t + dt;
    let adv_now = if opts.advection {
        Some(advect(&state.u, &state.u)?)
    } else {
        None
    };
    let mut rhs = state.u.clone();
    rhs.axpy(dt, &src.forcing(t_next));
    rhs.axpy(-dt, &state.grad_p);
    if let Some(a) = &adv_now {
        match &state.adv_prev {
            Some(prev) => {
                rhs.axpy(-1.5 * dt, a);
                rhs.axpy(0.5 * dt, prev);
            }
            None => rhs.axpy(-dt, a),
        }
    }
    rhs.enforce_no_slip();

    let op = ImplicitOperator::new(&state.u, params, opts, dt);
    let (u_star, stats) = pcg(
        |v| op.apply(v),
        |r| op.precondition(r),
        &rhs,
        state.u.clone(),
        opts.krylov_tol,
        1e-300,
        opts.krylov_max_iter,
        "implicit velocity solve",
    )
    .with_context(|| format!("step at t = {t_next:.6}"))?;

    let proj = leray_project(&u_star).with_context(|| format!("step at t = {t_next:.6}"))?;
    let mut p = state.p.clone();
    p.axpy(1.0 / dt, &proj.q);
    p.remove_mean();
    let grad_p = gradient(&p);
    Ok(StepState {
        t: t_next,
        u: proj.u_df,
        p,
        grad_p,
        adv_prev: adv_now,
        krylov_iterations: stats.iterations,
    })
}

/// Per-step norms of the discrete solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    /// `||u||_H^2`
    pub h_sq: f64,
    /// `||u||_V^2`
    pub v_sq: f64,
    /// `||u||_{L^{r+1}}^{r+1}`
    pub lr1: f64,
    /// `||u_t||_H^2` from the step difference quotient (the initial entry
    /// uses the momentum-balance value).
    pub ut_h_sq: f64,
}

/// Momentum-balance `u_t` norms at a snapshot time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtSample {
    pub t: f64,
    pub h_sq: f64,
    pub v_sq: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub params: Params,
    pub options: SolverOptions,
    pub grid: Grid,
    /// Effective step `T / steps`.
    pub dt: f64,
    pub steps: usize,
    pub snapshot_stride: usize,
    pub times: Vec<f64>,
    pub u: Vec<VectorField>,
    pub grad_p: Vec<VectorField>,
    pub p_final: ScalarField,
    /// `u_t(T)` from the momentum balance.
    pub v_final: VectorField,
    /// `u_t(T)` from backward differencing of the last states.
    pub v_difference: Option<VectorField>,
    /// `||v_final - v_difference||`.
    pub ut_discrepancy: Option<f64>,
    pub ut_warning: bool,
    pub energy_samples: Vec<EnergySample>,
    pub ut_samples: Vec<UtSample>,
    /// `max ||div u||_inf` over every step.
    pub max_divergence: f64,
    pub max_krylov_iterations: usize,
}

impl Trajectory {
    pub fn u_final(&self) -> &VectorField {
        self.u.last().expect("trajectory has the final snapshot")
    }

    pub fn grad_p_final(&self) -> &VectorField {
        self.grad_p.last().expect("trajectory has the final snapshot")
    }

    pub fn u0(&self) -> &VectorField {
        &self.u[0]
    }
}

fn difference_ut(tail: &[VectorField], dt: f64) -> Option<VectorField> {
    match tail.len() {
        0 | 1 => None,
        2 => Some((&tail[1] - &tail[0]).scaled(1.0 / dt)),
        _ => {
            let k = tail.len();
            let mut v = tail[k - 1].scaled(1.5 / dt);
            v.axpy(-2.0 / dt, &tail[k - 2]);
            v.axpy(0.5 / dt, &tail[k - 3]);
            Some(v)
        }
    }
}

fn check_initial(u0: &VectorField) -> Result<()> {
    if !u0.is_no_slip() {
        return Err(CbfError::Data("initial velocity violates the no-slip condition".into()));
    }
    let scale = (u0.max_abs() / u0.grid().h()).max(1.0);
    let div = divergence(u0).max_abs();
    if div > 1e-9 * scale {
        return Err(CbfError::Data(format!(
            "initial velocity is not divergence-free (max |div u0| = {div:.3e})"
        )));
    }
    Ok(())
}

/// Integrate from `t = 0` to `T`, recording every `snapshot_stride`-th state
/// and always the final one.
pub fn solve_direct(
    u0: &VectorField,
    params: &Params,
    src: &SourceProfile,
    snapshot_stride: usize,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    let grid = *u0.grid();
    params.validate_for_dim(grid.dim())?;
    grid.check_same(src.grid())?;
    check_initial(u0)?;
    if snapshot_stride == 0 {
        return Err(CbfError::Parameter("snapshot_stride must be at least 1".into()));
    }
    if !src.g.covers(0.0, params.t_final) {
        return Err(CbfError::Data("g samples do not cover [0, T]".into()));
    }
    let steps = params.steps();
    if steps > opts.max_steps {
        return Err(CbfError::Parameter(format!(
            "{steps} steps exceed the budget of {}",
            opts.max_steps
        )));
    }
    let dt = params.effective_dt();
    let rp1 = params.r + 1.0;

    let p0 = recover_pressure(u0, 0.0, params, src, opts)?;
    let mut state = StepState::new(0.0, u0.clone(), p0);
    let v0 = v0_formula(u0, params, src, opts)?;

    let mut times = vec![0.0];
    let mut us = vec![u0.clone()];
    let mut gps = vec![state.grad_p.clone()];
    let mut energy = vec![EnergySample {
        t: 0.0,
        h_sq: u0.inner(u0),
        v_sq: h1_semi_sq(u0),
        lr1: lp_pow(u0, rp1),
        ut_h_sq: v0.inner(&v0),
    }];
    let mut ut_samples = vec![UtSample {
        t: 0.0,
        h_sq: v0.inner(&v0),
        v_sq: h1_semi_sq(&v0),
    }];
    let mut tail = vec![u0.clone()];
    let mut max_div = divergence(u0).max_abs();
    let mut max_krylov = 0;

    for k in 1..=steps {
        let next = step(&state, params, src, opts, dt)?;
        let t = k as f64 * dt;
        let du = (&next.u - &state.u).scaled(1.0 / dt);
        max_div = max_div.max(divergence(&next.u).max_abs());
        max_krylov = max_krylov.max(next.krylov_iterations);
        energy.push(EnergySample {
            t,
            h_sq: next.u.inner(&next.u),
            v_sq: h1_semi_sq(&next.u),
            lr1: lp_pow(&next.u, rp1),
            ut_h_sq: du.inner(&du),
        });
        tail.push(next.u.clone());
        if tail.len() > 3 {
            tail.remove(0);
        }
        state = next;
        state.t = t;
        if k % snapshot_stride == 0 || k == steps {
            let v = extract_ut_from(&state.u, &state.grad_p, t, params, src, opts)?;
            ut_samples.push(UtSample {
                t,
                h_sq: v.inner(&v),
                v_sq: h1_semi_sq(&v),
            });
            times.push(t);
            us.push(state.u.clone());
            gps.push(state.grad_p.clone());
        }
    }

    let v_final = extract_ut_from(&state.u, &state.grad_p, params.t_final, params, src, opts)?;
    let v_difference = difference_ut(&tail, dt);
    let ut_discrepancy = v_difference.as_ref().map(|d| (&v_final - d).l2());
    let ut_warning = match ut_discrepancy {
        Some(d) => d > opts.ut_warn_threshold * v_final.l2().max(f64::MIN_POSITIVE),
        None => false,
    };
    Ok(Trajectory {
        params: *params,
        options: *opts,
        grid,
        dt,
        steps,
        snapshot_stride,
        times,
        u: us,
        grad_p: gps,
        p_final: state.p,
        v_final,
        v_difference,
        ut_discrepancy,
        ut_warning,
        energy_samples: energy,
        ut_samples,
        max_divergence: max_div,
        max_krylov_iterations: max_krylov,
    })
}
