use serde::{Deserialize, Serialize};

use crate::error::{CbfError, Result};

/// Physical constants and run horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Brinkman coefficient (effective viscosity).
    pub mu: f64,
    /// Darcy coefficient.
    pub alpha: f64,
    /// Forchheimer coefficient.
    pub beta: f64,
    /// Absorption exponent.
    pub r: f64,
    /// Final time.
    pub t_final: f64,
    pub dt: f64,
}

impl Params {
    pub fn new(mu: f64, alpha: f64, beta: f64, r: f64, t_final: f64, dt: f64) -> Result<Self> {
        let p = Params {
            mu,
            alpha,
            beta,
            r,
            t_final,
            dt,
        };
        p.validate()?;
        Ok(p)
    }

    /// Dimension-independent invariants.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu", self.mu),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("t_final", self.t_final),
            ("dt", self.dt),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CbfError::Parameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.r >= 1.0 && self.r.is_finite()) {
            return Err(CbfError::Parameter(format!("r must be >= 1, got {}", self.r)));
        }
        Ok(())
    }

    /// Full validation for a run in `dim` dimensions.
    pub fn validate_for_dim(&self, dim: usize) -> Result<()> {
        self.validate()?;
        if dim == 3 {
            if self.r < 3.0 {
                return Err(CbfError::Parameter(format!("3D requires r >= 3, got r = {}", self.r)));
            }
            if self.r == 3.0 && 2.0 * self.beta * self.mu < 1.0 {
                return Err(CbfError::Parameter(format!(
                    "3D with r = 3 requires 2 beta mu >= 1, got {}",
                    2.0 * self.beta * self.mu
                )));
            }
        }
        Ok(())
    }

    pub fn with_dt(&self, dt: f64) -> Params {
        Params { dt, ..*self }
    }

    /// Number of steps `ceil(T / dt)`; the effective step is `T / steps`.
    pub fn steps(&self) -> usize {
        let ratio = self.t_final / self.dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() <= 1e-9 * rounded.max(1.0) {
            (rounded as usize).max(1)
        } else {
            (ratio.ceil() as usize).max(1)
        }
    }

    pub fn effective_dt(&self) -> f64 {
        self.t_final / self.steps() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants() {
        assert!(Params::new(1.0, 1.0, 1.0, 0.5, 1.0, 0.1).is_err());
        assert!(Params::new(0.0, 1.0, 1.0, 2.0, 1.0, 0.1).is_err());
        let p = Params::new(0.3, 1.0, 2.0, 2.0, 1.0, 0.1).unwrap();
        assert!(p.validate_for_dim(2).is_ok());
        let err = p.validate_for_dim(3).unwrap_err().to_string();
        assert!(err.contains("3D requires r >= 3"), "{err}");
        let p3 = Params { r: 3.0, ..p };
        assert!(p3.validate_for_dim(3).is_ok());
        let weak = Params { r: 3.0, mu: 0.2, ..p };
        assert!(weak.validate_for_dim(3).is_err());
    }

    #[test]
    fn step_count() {
        let p = Params::new(1.0, 1.0, 1.0, 1.0, 0.5, 0.1).unwrap();
        assert_eq!(p.steps(), 5);
        let p = p.with_dt(0.3);
        assert_eq!(p.steps(), 2);
        assert!((p.effective_dt() - 0.25).abs() < 1e-15);
    }
}
