//! Fine-to-coarse restriction between nested grids.

use super::field::{ScalarField, VectorField};
use super::grid::Grid;
use crate::error::{CbfError, Result};

fn ratio(fine: &Grid, coarse: &Grid) -> Result<usize> {
    if fine.dim() != coarse.dim() || !fine.n().is_multiple_of(coarse.n()) {
        return Err(CbfError::Shape(format!(
            "cannot restrict n={} onto n={}",
            fine.n(),
            coarse.n()
        )));
    }
    Ok(fine.n() / coarse.n())
}

/// Average of the fine cells covering each coarse cell.
pub fn restrict_scalar(s: &ScalarField, coarse: Grid) -> Result<ScalarField> {
    let fine = *s.grid();
    let m = ratio(&fine, &coarse)?;
    let fine_cells = fine.cell_shape();
    let mut out = ScalarField::zeros(coarse);
    let count = m.pow(coarse.dim() as u32) as f64;
    let off = |a: usize| if a < coarse.dim() { m } else { 1 };
    let data = out.data_mut();
    coarse.cell_shape().for_each(|i, k| {
        let mut acc = 0.0;
        for a0 in 0..off(0) {
            for a1 in 0..off(1) {
                for a2 in 0..off(2) {
                    let j = [i[0] * off(0) + a0, i[1] * off(1) + a1, i[2] * off(2) + a2];
                    acc += s.data()[fine_cells.index(j)];
                }
            }
        }
        data[k] = acc / count;
    });
    Ok(out)
}

/// Average of the fine faces tiling each coarse face. Fluxes through coarse
/// faces are preserved, so discretely divergence-free fields stay so.
pub fn restrict_vector(u: &VectorField, coarse: Grid) -> Result<VectorField> {
    let fine = *u.grid();
    let m = ratio(&fine, &coarse)?;
    let dim = coarse.dim();
    let count = m.pow(dim as u32 - 1) as f64;
    let mut out = VectorField::zeros(coarse);
    for c in 0..dim {
        let fs = fine.face_shape(c);
        let src = u.comp(c);
        let comp = out.comp_mut(c);
        let off = |a: usize| if a == c || a >= dim { 1 } else { m };
        coarse.face_shape(c).for_each(|i, k| {
            let mut acc = 0.0;
            for a0 in 0..off(0) {
                for a1 in 0..off(1) {
                    for a2 in 0..off(2) {
                        let d = [a0, a1, a2];
                        let mut j = [0; 3];
                        for a in 0..3 {
                            j[a] = if a == c { i[a] * m } else { i[a] * off(a) + d[a] };
                        }
                        acc += src[fs.index(j)];
                    }
                }
            }
            comp[k] = acc / count;
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ops::divergence;
    use crate::fields::random::FieldRng;

    #[test]
    fn restriction_keeps_divergence_free() {
        let fine = Grid::square(32).unwrap();
        let coarse = Grid::square(16).unwrap();
        let u = FieldRng::new(4).solenoidal(fine).unwrap();
        let r = restrict_vector(&u, coarse).unwrap();
        assert!(divergence(&r).max_abs() < 1e-11);
        assert!(r.is_no_slip());
    }

    #[test]
    fn restriction_exact_on_linear_data() {
        let fine = Grid::square(32).unwrap();
        let coarse = Grid::square(16).unwrap();
        let s = ScalarField::from_fn(fine, |x| 2.0 * x[0] - x[1]);
        let r = restrict_scalar(&s, coarse).unwrap();
        let e = ScalarField::from_fn(coarse, |x| 2.0 * x[0] - x[1]);
        assert!((&r - &e).max_abs() < 1e-13);
        assert!(restrict_scalar(&s, Grid::square(12).unwrap()).is_err());
    }
}
