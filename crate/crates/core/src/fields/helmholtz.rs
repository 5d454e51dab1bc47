use super::field::VectorField;
use super::grid::Shape;
use super::spectral::{AxisKind, Layout};

/// Solve `(a + b M_c - c lap) v = rhs` on interior faces, where `M_c` is the
/// `(1/4, 1/2, 1/4)` average along each component's own axis and `lap` the
/// no-slip vector Laplacian. Boundary-normal entries of the result are zero.
pub fn helmholtz_solve(rhs: &VectorField, a: f64, b: f64, c: f64) -> VectorField {
    let grid = *rhs.grid();
    let n = grid.n();
    let mut out = VectorField::zeros(grid);
    for comp in 0..grid.dim() {
        let faces = grid.face_shape(comp);
        let mut dims = grid.cell_shape().dims;
        dims[comp] = n - 1;
        let mut kinds = [AxisKind::DirichletCell; 3];
        kinds[comp] = AxisKind::DirichletFace;
        let layout = Layout {
            shape: Shape { dims },
            kinds,
            n,
        };
        let mut buf = vec![0.0; layout.shape.len()];
        let src = rhs.comp(comp);
        let interior = |i: [usize; 3]| {
            let mut j = i;
            j[comp] -= 1;
            layout.shape.index(j)
        };
        faces.for_each(|i, k| {
            if i[comp] > 0 && i[comp] < n {
                buf[interior(i)] = src[k];
            }
        });
        layout.apply_symbol(&mut buf, |m| {
            let avg = kinds[comp].average_symbol(m[comp], n);
            1.0 / (a + b * avg + c * layout.laplace_eigenvalue(m))
        });
        let dst = out.comp_mut(comp);
        faces.for_each(|i, k| {
            if i[comp] > 0 && i[comp] < n {
                dst[k] = buf[interior(i)];
            }
        });
    }
    out
}
