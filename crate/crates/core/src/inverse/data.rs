use crate::error::{CbfError, Result};
use crate::fields::{divergence, Grid, ScalarField, VectorField};

/// Final-time measurements `u(., T) = phi`, `grad p(., T) = grad psi`, with
/// the source profile at `T` and a certified lower bound on `|g(., T)|`.
#[derive(Clone, Debug)]
pub struct OverdeterminationData {
    pub phi: VectorField,
    pub grad_psi: VectorField,
    pub g_at_t: ScalarField,
    pub g_t_floor: f64,
}

/// Relative divergence tolerance accepted for measured velocities.
pub const DATA_DIV_TOL: f64 = 1e-8;

impl OverdeterminationData {
    pub fn new(phi: VectorField, grad_psi: VectorField, g_at_t: ScalarField, g_t_floor: f64) -> Result<Self> {
        let d = OverdeterminationData {
            phi,
            grad_psi,
            g_at_t,
            g_t_floor,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn grid(&self) -> &Grid {
        self.phi.grid()
    }

    pub fn validate(&self) -> Result<()> {
        let grid = *self.phi.grid();
        grid.check_same(self.grad_psi.grid())?;
        grid.check_same(self.g_at_t.grid())?;
        if !(self.g_t_floor > 0.0) {
            return Err(CbfError::Data(format!(
                "g(., T) floor must be positive, got {}",
                self.g_t_floor
            )));
        }
        let min = self.g_at_t.min_abs();
        if min < self.g_t_floor {
            return Err(CbfError::Data(format!(
                "min |g(., T)| = {min:.6e} is below the floor {:.6e}",
                self.g_t_floor
            )));
        }
        if !self.phi.is_no_slip() {
            return Err(CbfError::Data("phi violates the no-slip condition".into()));
        }
        let scale = (self.phi.max_abs() / grid.h()).max(1.0);
        let div = divergence(&self.phi).max_abs();
        if div > DATA_DIV_TOL * scale {
            return Err(CbfError::Data(format!(
                "phi is not divergence-free (max |div phi| = {div:.3e})"
            )));
        }
        Ok(())
    }
}
