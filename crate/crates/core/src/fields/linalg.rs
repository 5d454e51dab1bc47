use super::field::{ScalarField, VectorField};
use crate::error::{CbfError, Result};

/// Minimal vector-space interface needed by the Krylov solver.
pub trait KrylovVector: Clone {
    fn dot(&self, other: &Self) -> f64;
    fn axpy(&mut self, a: f64, x: &Self);
    fn scale(&mut self, a: f64);
}

impl KrylovVector for ScalarField {
    fn dot(&self, other: &Self) -> f64 {
        self.inner(other)
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        ScalarField::axpy(self, a, x)
    }
    fn scale(&mut self, a: f64) {
        for v in self.data_mut() {
            *v *= a;
        }
    }
}

impl KrylovVector for VectorField {
    fn dot(&self, other: &Self) -> f64 {
        self.inner(other)
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        VectorField::axpy(self, a, x)
    }
    fn scale(&mut self, a: f64) {
        VectorField::scale(self, a)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct KrylovStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients for a symmetric positive
/// (semi-)definite operator. Stops when `||b - A x|| <= tol ||b||` or
/// `||b - A x|| <= abs_floor`.
pub fn pcg<V: KrylovVector>(
    apply: impl Fn(&V) -> V,
    precondition: impl Fn(&V) -> V,
    b: &V,
    x0: V,
    tol: f64,
    abs_floor: f64,
    max_iter: usize,
    context: &str,
) -> Result<(V, KrylovStats)> {
    let b_norm = b.dot(b).sqrt();
    let target = (tol * b_norm).max(abs_floor);
    let mut x = x0;
    let mut r = b.clone();
    r.axpy(-1.0, &apply(&x));
    let mut r_norm = r.dot(&r).sqrt();
    let rel = |rn: f64| if b_norm > 0.0 { rn / b_norm } else { rn };
    if r_norm <= target {
        return Ok((
            x,
            KrylovStats {
                iterations: 0,
                relative_residual: rel(r_norm),
            },
        ));
    }
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap = p.dot(&ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(CbfError::Convergence {
                context: format!("{context} (operator not positive definite)"),
                iterations: it,
                residual: rel(r_norm),
            });
        }
        let step = rz / pap;
        x.axpy(step, &p);
        r.axpy(-step, &ap);
        r_norm = r.dot(&r).sqrt();
        if r_norm <= target {
            return Ok((
                x,
                KrylovStats {
                    iterations: it,
                    relative_residual: rel(r_norm),
                },
            ));
        }
        z = precondition(&r);
        let rz_new = r.dot(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.scale(beta);
        p.axpy(1.0, &z);
    }
    Err(CbfError::Convergence {
        context: context.to_string(),
        iterations: max_iter,
        residual: rel(r_norm),
    })
}
