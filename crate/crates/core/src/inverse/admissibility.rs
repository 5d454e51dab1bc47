use serde::{Deserialize, Serialize};

use crate::direct::Params;
use crate::fields::{lp, VectorField};

/// Which viscosity threshold a condition encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    /// `||phi||_{L^4} (2 / lambda1)^{1/4} < mu`, planar flow.
    PlanarDataBound,
    /// `(r-3)/(lambda1 mu (r-1)) (2/(beta mu (r-1)))^{2/(r-3)} < mu`, 3D with `r > 3`.
    FastGrowth,
    /// `1/(2 beta) < mu`, 3D with `r = 3`.
    Critical,
    /// `mu > max{1/beta, 1/sqrt(lambda1)} / 2`, alternative for 3D with `r > 3`.
    Alternative,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub kind: ConditionKind,
    pub applicable: bool,
    /// Left-hand side compared against `mu`.
    pub lhs: f64,
    /// `mu - lhs`.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityVerdict {
    pub dim: usize,
    pub mu: f64,
    pub beta: f64,
    pub r: f64,
    pub lambda1: f64,
    pub phi_l4: f64,
    pub conditions: Vec<ConditionResult>,
    /// True when at least one applicable condition holds.
    pub pass: bool,
    pub note: Option<String>,
}

fn result(kind: ConditionKind, applicable: bool, lhs: f64, mu: f64) -> ConditionResult {
    ConditionResult {
        kind,
        applicable,
        lhs,
        margin: mu - lhs,
        pass: applicable && lhs < mu,
    }
}

/// Left-hand sides of the four thresholds; `phi_l4` only enters the planar one.
pub fn thresholds(mu: f64, beta: f64, r: f64, lambda1: f64, phi_l4: f64) -> [(ConditionKind, f64); 4] {
    let planar = phi_l4 * (2.0 / lambda1).powf(0.25);
    let fast = if r > 3.0 {
        (r - 3.0) / (lambda1 * mu * (r - 1.0)) * (2.0 / (beta * mu * (r - 1.0))).powf(2.0 / (r - 3.0))
    } else {
        f64::NAN
    };
    let critical = 1.0 / (2.0 * beta);
    let alternative = 0.5 * (1.0 / beta).max(1.0 / lambda1.sqrt());
    [
        (ConditionKind::PlanarDataBound, planar),
        (ConditionKind::FastGrowth, fast),
        (ConditionKind::Critical, critical),
        (ConditionKind::Alternative, alternative),
    ]
}

/// Evaluate the viscosity thresholds from the raw numbers.
pub fn check_admissibility_values(dim: usize, mu: f64, beta: f64, r: f64, lambda1: f64, phi_l4: f64) -> AdmissibilityVerdict {
    let conditions: Vec<ConditionResult> = thresholds(mu, beta, r, lambda1, phi_l4)
        .into_iter()
        .map(|(kind, lhs)| {
            let applicable = match kind {
                ConditionKind::PlanarDataBound => dim == 2 && r >= 1.0,
                ConditionKind::FastGrowth | ConditionKind::Alternative => dim == 3 && r > 3.0,
                ConditionKind::Critical => dim == 3 && r == 3.0,
            };
            result(kind, applicable, if applicable { lhs } else { f64::NAN }, mu)
        })
        .collect();
    let any_applicable = conditions.iter().any(|c| c.applicable);
    let pass = conditions.iter().any(|c| c.pass);
    let note = (!any_applicable).then(|| format!("no threshold covers dim = {dim} with r = {r}"));
    AdmissibilityVerdict {
        dim,
        mu,
        beta,
        r,
        lambda1,
        phi_l4,
        conditions,
        pass,
        note,
    }
}

/// Admissibility of `params` for the data velocity `phi`.
pub fn check_admissibility(params: &Params, phi: &VectorField, lambda1: f64) -> AdmissibilityVerdict {
    check_admissibility_values(phi.grid().dim(), params.mu, params.beta, params.r, lambda1, lp(phi, 4.0))
}
