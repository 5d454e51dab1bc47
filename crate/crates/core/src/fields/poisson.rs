use serde::{Deserialize, Serialize};

use super::field::ScalarField;
use super::grid::Grid;
use super::linalg::pcg;
use super::ops::{divergence, gradient};
use super::spectral::{AxisKind, Layout};
use crate::error::{CbfError, Result};

/// Boundary condition for the cell-centred Poisson problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoissonBc {
    Neumann,
    Dirichlet,
}

#[derive(Clone, Debug)]
pub struct PoissonSolution {
    pub solution: ScalarField,
    /// Mean subtracted from the right-hand side for Neumann compatibility.
    pub mean_removed: f64,
    /// `||L q - rhs|| / ||rhs||` after the solve.
    pub relative_residual: f64,
    /// Krylov iterations spent refining the transform solution.
    pub refinement_iterations: usize,
}

pub const POISSON_TOL: f64 = 1e-10;
pub const POISSON_ABS_FLOOR: f64 = 1e-13;

/// Pressure-type Laplacian `div grad q` with zero normal flux.
pub fn laplacian_neumann(q: &ScalarField) -> ScalarField {
    divergence(&gradient(q))
}

/// Cell-centred Laplacian with `q = 0` imposed on the walls by odd reflection.
pub fn laplacian_dirichlet(q: &ScalarField) -> ScalarField {
    let grid = *q.grid();
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let cells = grid.cell_shape();
    let src = q.data();
    let mut out = ScalarField::zeros(grid);
    let data = out.data_mut();
    cells.for_each(|i, k| {
        let c = src[k];
        let mut acc = 0.0;
        for a in 0..grid.dim() {
            let mut j = i;
            let lo = if i[a] == 0 {
                -c
            } else {
                j[a] -= 1;
                src[cells.index(j)]
            };
            let mut j = i;
            let hi = if i[a] == n - 1 {
                -c
            } else {
                j[a] += 1;
                src[cells.index(j)]
            };
            acc += lo - 2.0 * c + hi;
        }
        data[k] = acc * inv_h2;
    });
    out
}

fn layout(grid: &Grid, bc: PoissonBc) -> Layout {
    let kind = match bc {
        PoissonBc::Neumann => AxisKind::NeumannCell,
        PoissonBc::Dirichlet => AxisKind::DirichletCell,
    };
    Layout {
        shape: grid.cell_shape(),
        kinds: [kind; 3],
        n: grid.n(),
    }
}

/// Exact inverse of the constant-coefficient operator by transforms; the
/// Neumann null mode is mapped to zero.
fn spectral_inverse(rhs: &ScalarField, bc: PoissonBc) -> ScalarField {
    let l = layout(rhs.grid(), bc);
    let mut data = rhs.data().to_vec();
    l.apply_symbol(&mut data, |m| {
        let lam = l.laplace_eigenvalue(m);
        if lam == 0.0 {
            0.0
        } else {
            -1.0 / lam
        }
    });
    ScalarField::from_vec(*rhs.grid(), data).expect("layout preserves length")
}

/// Solve `L q = rhs` for the chosen boundary condition. Neumann solutions are
/// returned with zero mean.
pub fn poisson_solve(rhs: &ScalarField, bc: PoissonBc) -> Result<PoissonSolution> {
    let mut b = rhs.clone();
    let mean_removed = match bc {
        PoissonBc::Neumann => b.remove_mean(),
        PoissonBc::Dirichlet => 0.0,
    };
    let apply = |q: &ScalarField| match bc {
        PoissonBc::Neumann => laplacian_neumann(q),
        PoissonBc::Dirichlet => laplacian_dirichlet(q),
    };
    let b_norm = b.l2();
    let mut q = spectral_inverse(&b, bc);
    if bc == PoissonBc::Neumann {
        q.remove_mean();
    }
    let residual = |q: &ScalarField| (&apply(q) - &b).l2();
    let target = (POISSON_TOL * b_norm).max(POISSON_ABS_FLOOR);
    let mut res = residual(&q);
    let mut refinement_iterations = 0;
    if res > target {
        // the transform solve lost accuracy; polish with CG on -L
        let neg = |v: &ScalarField| &apply(v) * -1.0;
        let prec = |v: &ScalarField| &spectral_inverse(v, bc) * -1.0;
        let minus_b = &b * -1.0;
        let (refined, stats) = pcg(
            neg,
            prec,
            &minus_b,
            q,
            POISSON_TOL,
            POISSON_ABS_FLOOR,
            200,
            "Poisson refinement",
        )?;
        q = refined;
        if bc == PoissonBc::Neumann {
            q.remove_mean();
        }
        refinement_iterations = stats.iterations;
        res = residual(&q);
        if res > target {
            return Err(CbfError::Convergence {
                context: "Poisson solve".into(),
                iterations: refinement_iterations,
                residual: res / b_norm.max(f64::MIN_POSITIVE),
            });
        }
    }
    Ok(PoissonSolution {
        solution: q,
        mean_removed,
        relative_residual: if b_norm > 0.0 { res / b_norm } else { res },
        refinement_iterations,
    })
}
