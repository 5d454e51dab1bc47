use serde::{Deserialize, Serialize};

use crate::error::{CbfError, Result, ResultExt};
use crate::fields::helmholtz::helmholtz_solve;
use crate::fields::linalg::pcg;
use crate::fields::{laplacian, project, Grid, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lambda1Estimate {
    pub n: usize,
    pub lambda1: f64,
    /// `||K x - lambda x||` for the unit-norm eigenvector estimate `x`.
    pub residual: f64,
    pub iterations: usize,
}

pub const LAMBDA1_TOL: f64 = 1e-6;
const MAX_OUTER: usize = 200;

/// Discrete Stokes operator `K v = -P lap v` on divergence-free fields.
fn stokes(v: &VectorField) -> Result<VectorField> {
    project(&laplacian(v).scaled(-1.0))
}

/// Smallest eigenvalue of the discrete Stokes operator by inverse power
/// iteration; the inner solves use projected CG preconditioned by the
/// inverse vector Laplacian.
pub fn estimate_lambda1(grid: Grid) -> Result<Lambda1Estimate> {
    lambda1_mode(grid).map(|(est, _)| est)
}

/// [`estimate_lambda1`] together with the unit-norm eigenvector.
pub fn lambda1_mode(grid: Grid) -> Result<(Lambda1Estimate, VectorField)> {
    let mut x = start_vector(grid)?;
    x.scale(1.0 / x.l2());
    let precond = |r: &VectorField| project(&helmholtz_solve(r, 0.0, 0.0, 1.0)).expect("projection of a smooth field");
    let apply = |v: &VectorField| stokes(v).expect("projection of a smooth field");
    let mut lambda = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_OUTER {
        let (y, _) = pcg(apply, precond, &x, x.clone(), 1e-11, 1e-300, 500, "Stokes solve")
            .with_context(|| format!("inverse power iteration {it}"))?;
        x = project(&y)?;
        x.scale(1.0 / x.l2());
        let kx = stokes(&x)?;
        lambda = kx.inner(&x);
        residual = (&kx - &x.scaled(lambda)).l2();
        if residual <= LAMBDA1_TOL * lambda {
            let est = Lambda1Estimate {
                n: grid.n(),
                lambda1: lambda,
                residual,
                iterations: it,
            };
            return Ok((est, x));
        }
    }
    Err(CbfError::Convergence {
        context: format!("lambda1 estimate (last value {lambda:.8})"),
        iterations: MAX_OUTER,
        residual: residual / lambda,
    })
}

/// Discrete curl of `sin^2(pi x) sin^2(pi y)` (a single cell of
/// circulation); in 3D the same field in the x-y plane, modulated in z.
fn start_vector(grid: Grid) -> Result<VectorField> {
    use std::f64::consts::PI;
    let s2 = |t: f64| (PI * t).sin().powi(2);
    let ds2 = |t: f64| PI * (2.0 * PI * t).sin();
    let w = VectorField::from_fn_no_slip(grid, |x| {
        let z = if grid.dim() == 3 { s2(x[2]) } else { 1.0 };
        [s2(x[0]) * ds2(x[1]) * z, -ds2(x[0]) * s2(x[1]) * z, 0.0]
    });
    project(&w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_estimate_in_bounds() {
        let est = estimate_lambda1(Grid::square(16).unwrap()).unwrap();
        let lower = 2.0 * std::f64::consts::PI.powi(2);
        assert!(est.lambda1 > lower && est.lambda1 < 64.0, "{est:?}");
        assert!(est.residual <= 1e-6 * est.lambda1);
    }
}
