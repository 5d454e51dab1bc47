use serde::{Deserialize, Serialize};

use super::field::{ScalarField, VectorField};
use super::ops::{power, to_cells};

/// Bundle of discrete norms of one field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2: f64,
    pub h1_semi: f64,
    pub lp: f64,
    pub p: f64,
}

/// Squared discrete V-norm, `<-laplacian(u), u>` for no-slip `u`.
///
/// Differences along a component's normal axis run over all `n` cell
/// widths. Along tangential axes, interior differences carry the cell weight
/// and the two wall differences `2 u / h` carry half of it.
pub fn h1_semi_sq(u: &VectorField) -> f64 {
    let grid = *u.grid();
    let n = grid.n();
    let h = grid.h();
    let w = grid.cell_volume();
    let mut total = 0.0;
    for c in 0..grid.dim() {
        let faces = grid.face_shape(c);
        let uc = u.comp(c);
        let mut acc = 0.0;
        faces.for_each(|i, k| {
            for a in 0..grid.dim() {
                if a == c {
                    if i[c] < n {
                        let mut j = i;
                        j[c] += 1;
                        let d = (uc[faces.index(j)] - uc[k]) / h;
                        acc += w * d * d;
                    }
                    continue;
                }
                if i[c] == 0 || i[c] == n {
                    continue;
                }
                if i[a] == 0 {
                    let d = 2.0 * uc[k] / h;
                    acc += 0.5 * w * d * d;
                }
                if i[a] == n - 1 {
                    let d = 2.0 * uc[k] / h;
                    acc += 0.5 * w * d * d;
                } else {
                    let mut j = i;
                    j[a] += 1;
                    let d = (uc[faces.index(j)] - uc[k]) / h;
                    acc += w * d * d;
                }
            }
        });
        total += acc;
    }
    total
}

pub fn h1_semi(u: &VectorField) -> f64 {
    h1_semi_sq(u).sqrt()
}

/// `sum_cells h^d |I u|^p`, the p-th power of the cell-centred L^p norm.
pub fn lp_pow(u: &VectorField, p: f64) -> f64 {
    let cells = to_cells(u);
    let len = cells[0].len();
    let mut sum = 0.0;
    for k in 0..len {
        let m2: f64 = cells.iter().map(|c| c[k] * c[k]).sum();
        sum += power(m2.sqrt(), p);
    }
    sum * u.grid().cell_volume()
}

pub fn lp(u: &VectorField, p: f64) -> f64 {
    lp_pow(u, p).powf(1.0 / p)
}

pub fn scalar_lp(s: &ScalarField, p: f64) -> f64 {
    let sum: f64 = s.data().iter().map(|v| power(v.abs(), p)).sum();
    (sum * s.grid().cell_volume()).powf(1.0 / p)
}

pub fn vector_norms(u: &VectorField, p: f64) -> Norms {
    Norms {
        l2: u.l2(),
        h1_semi: h1_semi(u),
        lp: lp(u, p),
        p,
    }
}

/// Scalar norms; `h1_semi` is the L2 norm of the face gradient.
pub fn scalar_norms(s: &ScalarField, p: f64) -> Norms {
    Norms {
        l2: s.l2(),
        h1_semi: super::ops::gradient(s).l2(),
        lp: scalar_lp(s, p),
        p,
    }
}
