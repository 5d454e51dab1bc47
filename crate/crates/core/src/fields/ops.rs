//! Second-order MAC stencils: divergence, gradient, vector Laplacian,
//! skew-symmetric advection and the Darcy-Forchheimer damping term.

use super::field::{ScalarField, VectorField};
use super::grid::Grid;
use crate::error::{CbfError, Result};

#[inline]
fn unit(a: usize) -> [usize; 3] {
    let mut e = [0; 3];
    e[a] = 1;
    e
}

#[inline]
fn plus(i: [usize; 3], a: usize) -> [usize; 3] {
    let mut j = i;
    j[a] += 1;
    j
}

#[inline]
fn minus(i: [usize; 3], a: usize) -> [usize; 3] {
    let mut j = i;
    j[a] -= 1;
    j
}

/// Cell-centred divergence `sum_c (u_c[i + e_c] - u_c[i]) / h`.
pub fn divergence(u: &VectorField) -> ScalarField {
    let grid = *u.grid();
    let h = grid.h();
    let cells = grid.cell_shape();
    let mut out = ScalarField::zeros(grid);
    for c in 0..grid.dim() {
        let faces = grid.face_shape(c);
        let uc = u.comp(c);
        let e = unit(c);
        let data = out.data_mut();
        cells.for_each(|i, k| {
            let hi = [i[0] + e[0], i[1] + e[1], i[2] + e[2]];
            data[k] += (uc[faces.index(hi)] - uc[faces.index(i)]) / h;
        });
    }
    out
}

/// Face-centred gradient of a cell-centred scalar; zero on boundary-normal faces.
pub fn gradient(s: &ScalarField) -> VectorField {
    let grid = *s.grid();
    let h = grid.h();
    let n = grid.n();
    let cells = grid.cell_shape();
    let mut out = VectorField::zeros(grid);
    for c in 0..grid.dim() {
        let faces = grid.face_shape(c);
        let comp = out.comp_mut(c);
        faces.for_each(|i, k| {
            if i[c] > 0 && i[c] < n {
                comp[k] = (s.data()[cells.index(i)] - s.data()[cells.index(minus(i, c))]) / h;
            }
        });
    }
    out
}

/// Component-wise 5-point (7-point in 3D) Laplacian on interior faces.
///
/// Along a component's own axis the stored boundary-normal values act as
/// Dirichlet data. Along tangential axes the wall value is imposed through
/// the odd reflection `ghost = -u`. Boundary-normal output entries are zero.
pub fn laplacian(u: &VectorField) -> VectorField {
    let grid = *u.grid();
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let mut out = VectorField::zeros(grid);
    for c in 0..grid.dim() {
        let faces = grid.face_shape(c);
        let uc = u.comp(c);
        let comp = out.comp_mut(c);
        faces.for_each(|i, k| {
            if i[c] == 0 || i[c] == n {
                return;
            }
            let centre = uc[k];
            let mut acc = 0.0;
            for a in 0..grid.dim() {
                let lo = if i[a] == 0 { -centre } else { uc[faces.index(minus(i, a))] };
                let hi = if a != c && i[a] == n - 1 {
                    -centre
                } else {
                    uc[faces.index(plus(i, a))]
                };
                acc += lo - 2.0 * centre + hi;
            }
            comp[k] = acc * inv_h2;
        });
    }
    out
}

/// Skew-symmetric discretisation of `(u . grad) w`.
///
/// Each momentum control volume exchanges `F w_nb / (2h)` with its
/// neighbours, where `F` is the face-averaged transport velocity of `u`
/// shared by both sides. The resulting matrix is antisymmetric, so
/// `<advect(u, w), w> = 0` up to roundoff for no-slip `u` and `w`; for
/// divergence-free `u` the stencil equals the average of the advective
/// and conservative forms.
pub fn advect(u: &VectorField, w: &VectorField) -> Result<VectorField> {
    u.check_grid(w)?;
    let grid = *u.grid();
    let n = grid.n();
    let dim = grid.dim();
    let scale = 0.5 / grid.h();
    let mut out = VectorField::zeros(grid);
    let face_shapes: Vec<_> = (0..dim).map(|a| grid.face_shape(a)).collect();
    for c in 0..dim {
        let faces = face_shapes[c];
        let uc = u.comp(c);
        let wc = w.comp(c);
        let comp = out.comp_mut(c);
        faces.for_each(|i, k| {
            if i[c] == 0 || i[c] == n {
                return;
            }
            let centre = wc[k];
            let mut acc = 0.0;
            for a in 0..dim {
                let (f_lo, f_hi) = if a == c {
                    let lo = uc[faces.index(minus(i, c))];
                    let hi = uc[faces.index(plus(i, c))];
                    (0.5 * (lo + uc[k]), 0.5 * (uc[k] + hi))
                } else {
                    // transport velocity u_a on the two a-faces flanking this
                    // control volume, averaged over the cells on either side of
                    // the c-face
                    let ua = u.comp(a);
                    let sa = face_shapes[a];
                    let cell_hi = i;
                    let cell_lo = minus(i, c);
                    let lo = 0.5 * (ua[sa.index(cell_hi)] + ua[sa.index(cell_lo)]);
                    let hi = 0.5
                        * (ua[sa.index(plus(cell_hi, a))] + ua[sa.index(plus(cell_lo, a))]);
                    (lo, hi)
                };
                let w_lo = if a != c && i[a] == 0 {
                    -centre
                } else {
                    wc[faces.index(minus(i, a))]
                };
                let w_hi = if a != c && i[a] == n - 1 {
                    -centre
                } else {
                    wc[faces.index(plus(i, a))]
                };
                acc += f_hi * w_hi - f_lo * w_lo;
            }
            comp[k] = acc * scale;
        });
    }
    Ok(out)
}

/// Cell-centred vector samples produced by averaging each component over
/// the two faces of a cell. One `Vec<f64>` per component, cell layout.
pub fn to_cells(u: &VectorField) -> Vec<Vec<f64>> {
    let grid = *u.grid();
    let cells = grid.cell_shape();
    (0..grid.dim())
        .map(|c| {
            let faces = grid.face_shape(c);
            let uc = u.comp(c);
            let mut out = vec![0.0; cells.len()];
            cells.for_each(|i, k| {
                out[k] = 0.5 * (uc[faces.index(i)] + uc[faces.index(plus(i, c))]);
            });
            out
        })
        .collect()
}

/// Adjoint of [`to_cells`] with respect to the face and cell inner products.
pub fn from_cells(grid: Grid, cellwise: &[Vec<f64>]) -> VectorField {
    let n = grid.n();
    let cells = grid.cell_shape();
    let mut out = VectorField::zeros(grid);
    for c in 0..grid.dim() {
        let faces = grid.face_shape(c);
        let src = &cellwise[c];
        let comp = out.comp_mut(c);
        faces.for_each(|i, k| {
            comp[k] = if i[c] == 0 {
                src[cells.index(i)]
            } else if i[c] == n {
                src[cells.index(minus(i, c))]
            } else {
                0.5 * (src[cells.index(minus(i, c))] + src[cells.index(i)])
            };
        });
    }
    out
}

/// Pointwise Euclidean magnitude of the cell-centred interpolant.
pub fn cell_magnitude(u: &VectorField) -> Vec<f64> {
    let cellwise = to_cells(u);
    let len = cellwise[0].len();
    (0..len)
        .map(|k| cellwise.iter().map(|c| c[k] * c[k]).sum::<f64>().sqrt())
        .collect()
}

/// Symmetric linear operator `v - I^T I v + I^T (s I v)` where `I` is the
/// face-to-cell average and `s` a non-negative cell coefficient. With
/// `s = |I u|^{r-1}` this is the Forchheimer term frozen at `u`; with `s = 1`
/// it is the identity.
pub fn forchheimer_linear(v: &VectorField, coeff: &[f64]) -> VectorField {
    let grid = *v.grid();
    let mut cellwise = to_cells(v);
    let avg = from_cells(grid, &cellwise);
    for comp in cellwise.iter_mut() {
        for (x, s) in comp.iter_mut().zip(coeff) {
            *x *= s;
        }
    }
    let weighted = from_cells(grid, &cellwise);
    let mut out = v.clone();
    out.axpy(-1.0, &avg);
    out.axpy(1.0, &weighted);
    out
}

/// The Forchheimer nonlinearity `|u|^{r-1} u`, with the magnitude taken at
/// cell centres from interpolated components and mapped back to faces by the
/// adjoint average, plus the high-frequency correction `u - I^T I u` that
/// makes `r = 1` reproduce `u` exactly.
pub fn forchheimer(u: &VectorField, r: f64) -> VectorField {
    let coeff: Vec<f64> = cell_magnitude(u).into_iter().map(|m| power(m, r - 1.0)).collect();
    forchheimer_linear(u, &coeff)
}

#[inline]
pub(crate) fn power(m: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if m == 0.0 {
        0.0
    } else {
        m.powf(e)
    }
}

/// Absorption term `alpha u + beta |u|^{r-1} u`.
pub fn damping(u: &VectorField, r: f64, beta: f64, alpha: f64) -> Result<VectorField> {
    if r < 1.0 || !r.is_finite() {
        return Err(CbfError::Parameter(format!("r must be >= 1, got {r}")));
    }
    let mut out = forchheimer(u, r);
    out.scale(beta);
    out.axpy(alpha, u);
    Ok(out)
}

/// Cell-based weighted quadrature `sum_cells h^d |I a|^{r-1} |I d|^2`,
/// the discrete counterpart of `|| |a|^{(r-1)/2} d ||^2`.
pub fn weighted_norm_sq(a: &VectorField, d: &VectorField, r: f64) -> f64 {
    let grid = *a.grid();
    let mag = cell_magnitude(a);
    let dc = to_cells(d);
    let mut sum = 0.0;
    for k in 0..mag.len() {
        let d2: f64 = dc.iter().map(|c| c[k] * c[k]).sum();
        sum += power(mag[k], r - 1.0) * d2;
    }
    sum * grid.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::random::FieldRng;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::square(n).unwrap()
    }

    fn interior_max(u: &VectorField, c: usize, margin: usize, f: impl Fn([f64; 3]) -> f64) -> f64 {
        let g = *u.grid();
        let n = g.n();
        let shape = g.face_shape(c);
        let mut err = 0.0_f64;
        shape.for_each(|i, k| {
            if (0..g.dim()).all(|a| i[a] >= margin && i[a] + margin < n) {
                err = err.max((u.comp(c)[k] - f(g.face_center(c, i))).abs());
            }
        });
        err
    }

    #[test]
    fn divergence_of_zero_and_linear_fields() {
        let g = grid(16);
        assert_eq!(divergence(&VectorField::zeros(g)).max_abs(), 0.0);
        let u = VectorField::from_fn(g, |x| [x[0], -x[1], 0.0]);
        assert!(divergence(&u).max_abs() <= 1e-13);
        let u = VectorField::from_fn(g, |x| [x[0], x[1], 0.0]);
        let d = divergence(&u);
        assert!(d.data().iter().all(|v| (v - 2.0).abs() <= 1e-10));
    }

    #[test]
    fn gradient_of_constant_and_linear() {
        let g = grid(16);
        assert_eq!(gradient(&ScalarField::constant(g, 3.5)).max_abs(), 0.0);
        let s = ScalarField::from_fn(g, |x| x[0]);
        let gr = gradient(&s);
        assert!(interior_max(&gr, 0, 1, |_| 1.0) < 1e-12);
    }

    #[test]
    fn gradient_is_minus_adjoint_of_divergence() {
        let g = grid(24);
        let mut rng = FieldRng::new(7);
        for _ in 0..5 {
            let s = rng.scalar(g);
            let u = rng.no_slip(g);
            let lhs = gradient(&s).inner(&u);
            let rhs = -s.inner(&divergence(&u));
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn laplacian_eigenfunction() {
        let mut errs = Vec::new();
        for n in [16, 32, 64] {
            let g = grid(n);
            let f = |x: [f64; 3]| (PI * x[0]).sin() * (PI * x[1]).sin();
            let u = VectorField::from_fn_no_slip(g, |x| [f(x), 0.0, 0.0]);
            let l = laplacian(&u);
            errs.push(interior_max(&l, 0, 0, |x| -2.0 * PI * PI * f(x)));
        }
        // error ratio ~4 per refinement
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
        assert_eq!(laplacian(&VectorField::zeros(grid(8))).max_abs(), 0.0);
    }

    #[test]
    fn laplacian_symmetric() {
        let g = grid(20);
        let mut rng = FieldRng::new(11);
        let u = rng.no_slip(g);
        let w = rng.no_slip(g);
        let a = laplacian(&u).inner(&w);
        let b = u.inner(&laplacian(&w));
        assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn advection_skew_symmetry() {
        let g = grid(24);
        let mut rng = FieldRng::new(3);
        for _ in 0..5 {
            let u = rng.solenoidal(g).unwrap();
            let w = rng.no_slip(g);
            let val = advect(&u, &w).unwrap().inner(&w);
            assert!(val.abs() <= 1e-12 * u.l2() * w.l2().powi(2), "{val}");
        }
        let z = VectorField::zeros(g);
        let u = rng.solenoidal(g).unwrap();
        assert_eq!(advect(&u, &z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn advection_of_rigid_rotation() {
        let g = grid(32);
        let rot = |x: [f64; 3]| [-(x[1] - 0.5), x[0] - 0.5, 0.0];
        let u = VectorField::from_fn_no_slip(g, rot);
        let a = advect(&u, &u).unwrap();
        // (u . grad) u = -(x - 1/2, y - 1/2) for the rotation
        assert!(interior_max(&a, 0, 2, |x| -(x[0] - 0.5)) < 1e-12);
        assert!(interior_max(&a, 1, 2, |x| -(x[1] - 0.5)) < 1e-12);
    }

    #[test]
    fn damping_cases() {
        let g = grid(8);
        assert_eq!(damping(&VectorField::zeros(g), 3.0, 1.0, 1.0).unwrap().max_abs(), 0.0);
        let mut rng = FieldRng::new(5);
        let u = rng.no_slip(g);
        let d = damping(&u, 1.0, 0.7, 0.3).unwrap();
        let expect = u.scaled(1.0);
        for c in 0..2 {
            for (a, b) in d.comp(c).iter().zip(expect.comp(c)) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        let c2 = VectorField::from_fn(g, |_| [2.0, 0.0, 0.0]);
        let (alpha, beta) = (0.4, 1.5);
        let d = damping(&c2, 3.0, beta, alpha).unwrap();
        for v in d.comp(0) {
            assert!((v - (alpha * 2.0 + beta * 8.0)).abs() < 1e-13);
        }
        assert!(damping(&c2, 0.5, 1.0, 1.0).is_err());
    }
}
