use super::field::{ScalarField, VectorField};
use super::ops::{divergence, gradient};
use super::poisson::{poisson_solve, PoissonBc};
use crate::error::{ResultExt, Result};

/// Discrete Helmholtz-Hodge splitting of a face field.
#[derive(Clone, Debug)]
pub struct Projection {
    /// Divergence-free part with zero normal trace.
    pub u_df: VectorField,
    /// `gradient(q)`; zero on boundary-normal faces.
    pub grad_q: VectorField,
    /// Zero-mean potential.
    pub q: ScalarField,
}

/// Orthogonal projection onto discretely divergence-free fields with zero
/// normal trace. The boundary-normal trace of `w` is discarded first, so
/// `w = u_df + grad_q` holds on every interior face.
pub fn leray_project(w: &VectorField) -> Result<Projection> {
    let mut interior = w.clone();
    interior.enforce_no_slip();
    let rhs = divergence(&interior);
    let sol = poisson_solve(&rhs, PoissonBc::Neumann).with_context(|| "Leray projection".into())?;
    let grad_q = gradient(&sol.solution);
    interior.axpy(-1.0, &grad_q);
    Ok(Projection {
        u_df: interior,
        grad_q,
        q: sol.solution,
    })
}

/// Shorthand for the divergence-free part only.
pub fn project(w: &VectorField) -> Result<VectorField> {
    leray_project(w).map(|p| p.u_df)
}
