use serde::{Deserialize, Serialize};

use super::energy::strong_norm;
use crate::direct::{solve_direct, Params, SolverOptions, TimeProfile, Trajectory};
use crate::error::{CbfError, Result, ResultExt};
use crate::fields::{h1_semi, laplacian, lp_pow, VectorField};
use crate::inverse::{check_admissibility, fixed_point_solve, FixedPointOptions, ForwardModel, OverdeterminationData};

/// Initial velocity, final-time data and time profile of one experiment.
#[derive(Clone, Debug)]
pub struct DataBundle {
    pub u0: VectorField,
    pub data: OverdeterminationData,
    pub g: TimeProfile,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub fixed_point: FixedPointOptions,
    pub solver: SolverOptions,
    /// Stokes eigenvalue used by the admissibility check.
    pub lambda1: f64,
}

/// Reconstruction of one bundle followed by the direct run it implies.
#[derive(Clone, Debug)]
pub struct BundleOutcome {
    pub f_hat: VectorField,
    pub trajectory: Trajectory,
    pub summary: ReconstructionSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionSummary {
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: Option<f64>,
    pub fixed_point_defect: f64,
    pub admissibility_overridden: bool,
}

/// Terms of the solution-difference side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LhsTerms {
    /// `sup_t ||u1 - u2||_H`
    pub sup_h: f64,
    /// `(int ||u1 - u2||_V^2)^{1/2}`
    pub l2_v: f64,
    /// `(int ||u1 - u2||_{L^{r+1}}^{r+1})^{1/(r+1)}`
    pub lr1: f64,
    /// `||f1 - f2||_{L^2}`
    pub source: f64,
}

/// Terms of the data-difference side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhsTerms {
    /// Strong-norm surrogate of `u01 - u02`.
    pub initial: f64,
    /// `max |g1 - g2|` over the cells at every time level.
    pub g: f64,
    pub g_t: f64,
    /// `||grad (phi1 - phi2)||_H`
    pub grad_phi: f64,
    /// `||grad (psi1 - psi2) - mu lap (phi1 - phi2)||_H`
    pub balance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub lhs: f64,
    pub lhs_terms: LhsTerms,
    pub rhs_data: f64,
    pub rhs_terms: RhsTerms,
    /// `lhs / rhs_data`; absent when both sides vanish.
    pub implied_c: Option<f64>,
    /// Both sides are exactly zero.
    pub exact_zero: bool,
    /// A reconstruction did not converge.
    pub incomplete: bool,
    pub reconstructions: [ReconstructionSummary; 2],
    /// Time levels at which `g` was compared.
    pub g_samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub delta: f64,
    pub lhs: f64,
    pub rhs_data: f64,
    pub implied_c: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilitySweep {
    pub reports: Vec<StabilityReport>,
    pub scaling_table: Vec<ScalingRow>,
    /// `max / min` of the implied constants; absent unless all are finite
    /// and positive.
    pub spread: Option<f64>,
}

/// Reconstruct `f` from `bundle` and rerun the forward problem with it.
pub fn reconstruct_bundle(bundle: &DataBundle, params: &Params, cfg: &StabilityConfig) -> Result<BundleOutcome> {
    let verdict = check_admissibility(params, &bundle.data.phi, cfg.lambda1);
    let mut model = ForwardModel::new(bundle.u0.clone(), *params, bundle.g.clone());
    model.options = cfg.solver;
    let report = fixed_point_solve(&bundle.data, &model, &cfg.fixed_point, None, verdict.pass)?;
    if let Some(reason) = &report.failure {
        return Err(CbfError::Data(reason.clone()).context("stability reconstruction"));
    }
    let src = model.source(report.f_hat.clone())?;
    let trajectory = solve_direct(&bundle.u0, params, &src, 1, &cfg.solver)
        .with_context(|| "direct run with the reconstructed source".into())?;
    Ok(BundleOutcome {
        summary: ReconstructionSummary {
            iterations: report.iterations,
            converged: report.converged,
            final_residual: report.residual_history.last().copied(),
            fixed_point_defect: report.fixed_point_defect,
            admissibility_overridden: report.admissibility_overridden,
        },
        f_hat: report.f_hat,
        trajectory,
    })
}

/// Compare two reconstructed experiments.
pub fn compare_outcomes(
    b1: &DataBundle,
    o1: &BundleOutcome,
    b2: &DataBundle,
    o2: &BundleOutcome,
    params: &Params,
) -> Result<StabilityReport> {
    let (t1, t2) = (&o1.trajectory, &o2.trajectory);
    if t1.u.len() != t2.u.len() {
        return Err(CbfError::Shape("trajectories have different numbers of states".into()));
    }
    let rp1 = params.r + 1.0;
    let mut sup_h = 0.0_f64;
    let mut v_int = 0.0;
    let mut l_int = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (k, (a, b)) in t1.u.iter().zip(&t2.u).enumerate() {
        let d = a - b;
        sup_h = sup_h.max(d.l2());
        let q = (h1_semi(&d).powi(2), lp_pow(&d, rp1));
        if let Some(p) = prev {
            let dt = t1.times[k] - t1.times[k - 1];
            v_int += dt * 0.5 * (p.0 + q.0);
            l_int += dt * 0.5 * (p.1 + q.1);
        }
        prev = Some(q);
    }
    let lhs_terms = LhsTerms {
        sup_h,
        l2_v: v_int.sqrt(),
        lr1: l_int.powf(1.0 / rp1),
        source: (&o1.f_hat - &o2.f_hat).l2(),
    };

    let grid = t1.grid;
    let mut g = 0.0_f64;
    let mut g_t = 0.0_f64;
    for &t in &t1.times {
        g = g.max((&b1.g.at(&grid, t) - &b2.g.at(&grid, t)).max_abs());
        g_t = g_t.max((&b1.g.rate_at(&grid, t) - &b2.g.rate_at(&grid, t)).max_abs());
    }
    let dphi = &b1.data.phi - &b2.data.phi;
    let mut balance = &b1.data.grad_psi - &b2.data.grad_psi;
    balance.axpy(-params.mu, &laplacian(&dphi));
    let rhs_terms = RhsTerms {
        initial: strong_norm(&(&b1.u0 - &b2.u0)),
        g,
        g_t,
        grad_phi: h1_semi(&dphi),
        balance: balance.l2(),
    };

    let lhs = lhs_terms.sup_h + lhs_terms.l2_v + lhs_terms.lr1 + lhs_terms.source;
    let rhs_data = rhs_terms.initial + rhs_terms.g + rhs_terms.g_t + rhs_terms.grad_phi + rhs_terms.balance;
    let exact_zero = lhs == 0.0 && rhs_data == 0.0;
    Ok(StabilityReport {
        lhs,
        lhs_terms,
        rhs_data,
        rhs_terms,
        implied_c: (!exact_zero).then(|| lhs / rhs_data),
        exact_zero,
        incomplete: !(o1.summary.converged && o2.summary.converged),
        reconstructions: [o1.summary.clone(), o2.summary.clone()],
        g_samples: t1.times.len(),
    })
}

/// Reconstruct both bundles and compare the resulting solutions.
pub fn stability_experiment(
    b1: &DataBundle,
    b2: &DataBundle,
    params: &Params,
    cfg: &StabilityConfig,
) -> Result<StabilityReport> {
    let o1 = reconstruct_bundle(b1, params, cfg)?;
    let o2 = reconstruct_bundle(b2, params, cfg)?;
    compare_outcomes(b1, &o1, b2, &o2, params)
}

/// Compare `base` against each `(delta, bundle)` perturbation; the base is
/// reconstructed once.
pub fn stability_sweep(
    base: &DataBundle,
    perturbed: &[(f64, DataBundle)],
    params: &Params,
    cfg: &StabilityConfig,
) -> Result<StabilitySweep> {
    let o1 = reconstruct_bundle(base, params, cfg).with_context(|| "base bundle".into())?;
    let mut reports = Vec::with_capacity(perturbed.len());
    let mut scaling_table = Vec::with_capacity(perturbed.len());
    for (delta, b2) in perturbed {
        let o2 = reconstruct_bundle(b2, params, cfg).with_context(|| format!("bundle with delta = {delta}"))?;
        let rep = compare_outcomes(base, &o1, b2, &o2, params)?;
        scaling_table.push(ScalingRow {
            delta: *delta,
            lhs: rep.lhs,
            rhs_data: rep.rhs_data,
            implied_c: rep.implied_c,
        });
        reports.push(rep);
    }
    let cs: Option<Vec<f64>> = scaling_table
        .iter()
        .map(|r| r.implied_c.filter(|c| c.is_finite() && *c > 0.0))
        .collect();
    let spread = cs.filter(|c| !c.is_empty()).map(|c| {
        let max = c.iter().copied().fold(f64::MIN, f64::max);
        let min = c.iter().copied().fold(f64::MAX, f64::min);
        max / min
    });
    Ok(StabilitySweep {
        reports,
        scaling_table,
        spread,
    })
}
