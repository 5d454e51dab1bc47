use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use super::grid::Grid;
use crate::error::{CbfError, Result};

/// Cell-centred scalar samples (pressure, potentials, `g(., t)`).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            data: vec![0.0; grid.cell_shape().len()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        ScalarField {
            grid,
            data: vec![value; grid.cell_shape().len()],
        }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self> {
        let want = grid.cell_shape().len();
        if data.len() != want {
            return Err(CbfError::Shape(format!(
                "scalar field needs {want} values, got {}",
                data.len()
            )));
        }
        Ok(ScalarField { grid, data })
    }

    /// Sample `f` at cell centres.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let shape = grid.cell_shape();
        let mut data = vec![0.0; shape.len()];
        shape.for_each(|i, k| data[k] = f(grid.cell_center(i)));
        ScalarField { grid, data }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Subtract the discrete mean; returns the amount removed.
    pub fn remove_mean(&mut self) -> f64 {
        let m = self.mean();
        for v in &mut self.data {
            *v -= m;
        }
        m
    }

    /// `sum h^d s t` over cells.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.grid.cell_volume()
            * self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub fn l2(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min_abs(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn axpy(&mut self, a: f64, x: &ScalarField) {
        debug_assert_eq!(self.grid, x.grid);
        for (y, v) in self.data.iter_mut().zip(&x.data) {
            *y += a * v;
        }
    }
}

/// Face-centred (MAC) vector field. Component `c` is stored on the faces
/// normal to axis `c`, including the two boundary planes; for fields in the
/// no-slip class those boundary-normal entries are exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        let comps = (0..grid.dim())
            .map(|c| vec![0.0; grid.face_shape(c).len()])
            .collect();
        VectorField { grid, comps }
    }

    pub fn from_components(grid: Grid, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.dim() {
            return Err(CbfError::Shape(format!(
                "{}D grid needs {} components, got {}",
                grid.dim(),
                grid.dim(),
                comps.len()
            )));
        }
        for (c, v) in comps.iter().enumerate() {
            let want = grid.face_shape(c).len();
            if v.len() != want {
                return Err(CbfError::Shape(format!(
                    "component {c} needs {want} face values, got {}",
                    v.len()
                )));
            }
        }
        Ok(VectorField { grid, comps })
    }

    /// Sample `f` at face centres; component `c` of `f` is read on the faces
    /// normal to `c`. Boundary-normal faces are sampled as well.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut v = VectorField::zeros(grid);
        for c in 0..grid.dim() {
            let shape = grid.face_shape(c);
            let comp = &mut v.comps[c];
            shape.for_each(|i, k| comp[k] = f(grid.face_center(c, i))[c]);
        }
        v
    }

    /// Like [`VectorField::from_fn`] but with boundary-normal faces zeroed.
    pub fn from_fn_no_slip(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut v = Self::from_fn(grid, f);
        v.enforce_no_slip();
        v
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    #[inline]
    pub fn comp(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    #[inline]
    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    /// Visit the boundary-normal faces of every component.
    fn for_each_boundary_face(&self, mut f: impl FnMut(usize, usize)) {
        let n = self.grid.n();
        for c in 0..self.dim() {
            let shape = self.grid.face_shape(c);
            shape.for_each(|i, k| {
                if i[c] == 0 || i[c] == n {
                    f(c, k);
                }
            });
        }
    }

    pub fn enforce_no_slip(&mut self) {
        let mut hits = Vec::new();
        self.for_each_boundary_face(|c, k| hits.push((c, k)));
        for (c, k) in hits {
            self.comps[c][k] = 0.0;
        }
    }

    /// True when every boundary-normal face value is exactly zero.
    pub fn is_no_slip(&self) -> bool {
        let mut ok = true;
        self.for_each_boundary_face(|c, k| ok &= self.comps[c][k] == 0.0);
        ok
    }

    /// Quadrature weight of a face: `h^d`, halved on boundary-normal faces so
    /// that the weights of every component sum to one.
    #[inline]
    pub fn face_weight(grid: &Grid, axis: usize, i: [usize; 3]) -> f64 {
        let w = grid.cell_volume();
        if i[axis] == 0 || i[axis] == grid.n() {
            0.5 * w
        } else {
            w
        }
    }

    /// Discrete L2 inner product with trapezoidal weighting along each
    /// component's normal direction.
    pub fn inner(&self, other: &VectorField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let grid = self.grid;
        let mut total = 0.0;
        for c in 0..self.dim() {
            let shape = grid.face_shape(c);
            let (a, b) = (&self.comps[c], &other.comps[c]);
            let mut interior = 0.0;
            let mut boundary = 0.0;
            shape.for_each(|i, k| {
                if i[c] == 0 || i[c] == grid.n() {
                    boundary += a[k] * b[k];
                } else {
                    interior += a[k] * b[k];
                }
            });
            total += interior + 0.5 * boundary;
        }
        total * grid.cell_volume()
    }

    pub fn l2(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn axpy(&mut self, a: f64, x: &VectorField) {
        debug_assert_eq!(self.grid, x.grid);
        for (yc, xc) in self.comps.iter_mut().zip(&x.comps) {
            for (y, v) in yc.iter_mut().zip(xc) {
                *y += a * v;
            }
        }
    }

    pub fn scale(&mut self, a: f64) {
        for comp in &mut self.comps {
            for v in comp.iter_mut() {
                *v *= a;
            }
        }
    }

    pub fn scaled(&self, a: f64) -> VectorField {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// Componentwise `f(self, other)`.
    pub fn zip_map(&self, other: &VectorField, f: impl Fn(f64, f64) -> f64) -> VectorField {
        debug_assert_eq!(self.grid, other.grid);
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        VectorField {
            grid: self.grid,
            comps,
        }
    }

    /// Multiply by a cell-centred scalar interpolated to faces (arithmetic
    /// mean of the adjacent cells; the single adjacent cell on boundary faces).
    pub fn mul_scalar_field(&self, s: &ScalarField) -> VectorField {
        debug_assert_eq!(self.grid, *s.grid());
        let mut out = self.clone();
        for c in 0..self.dim() {
            let sv = face_interpolate(s, c);
            for (v, w) in out.comps[c].iter_mut().zip(&sv) {
                *v *= w;
            }
        }
        out
    }

    /// Divide by the face interpolation of `s`, refusing any face where that
    /// interpolation is smaller than `floor` in magnitude.
    pub fn div_scalar_field(&self, s: &ScalarField, floor: f64) -> Result<VectorField> {
        self.grid.check_same(s.grid())?;
        let mut out = self.clone();
        for c in 0..self.dim() {
            let sv = face_interpolate(s, c);
            for (v, w) in out.comps[c].iter_mut().zip(&sv) {
                if !(w.abs() >= floor) {
                    return Err(CbfError::Data(format!(
                        "divisor {w:.6e} on a component-{c} face is below the floor {floor:.6e}"
                    )));
                }
                *v /= w;
            }
        }
        Ok(out)
    }

    pub fn check_grid(&self, other: &VectorField) -> Result<()> {
        self.grid.check_same(&other.grid)
    }
}

/// Face values of a cell scalar for the faces normal to `c`.
fn face_interpolate(s: &ScalarField, c: usize) -> Vec<f64> {
    let grid = *s.grid();
    let n = grid.n();
    let cells = grid.cell_shape();
    let shape = grid.face_shape(c);
    let mut out = vec![0.0; shape.len()];
    shape.for_each(|i, k| {
        let mut lo = i;
        out[k] = if i[c] == 0 {
            s.data()[cells.index(i)]
        } else if i[c] == n {
            lo[c] -= 1;
            s.data()[cells.index(lo)]
        } else {
            lo[c] -= 1;
            0.5 * (s.data()[cells.index(lo)] + s.data()[cells.index(i)])
        };
    });
    out
}

impl Add<&VectorField> for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub<&VectorField> for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &VectorField {
    type Output = VectorField;
    fn mul(self, rhs: f64) -> VectorField {
        self.scaled(rhs)
    }
}

impl Neg for &VectorField {
    type Output = VectorField;
    fn neg(self) -> VectorField {
        self.scaled(-1.0)
    }
}

impl AddAssign<&VectorField> for VectorField {
    fn add_assign(&mut self, rhs: &VectorField) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&VectorField> for VectorField {
    fn sub_assign(&mut self, rhs: &VectorField) {
        self.axpy(-1.0, rhs);
    }
}

impl Add<&ScalarField> for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub<&ScalarField> for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.map(|v| v * rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_has_unit_l2() {
        let g = Grid::square(16).unwrap();
        let u = VectorField::from_fn(g, |_| [1.0, 0.0, 0.0]);
        assert!((u.l2() - 1.0).abs() < 1e-14);
        let g3 = Grid::new(3, 8).unwrap();
        let u3 = VectorField::from_fn(g3, |_| [0.0, 0.0, 1.0]);
        assert!((u3.l2() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn no_slip_flagging() {
        let g = Grid::square(8).unwrap();
        let mut u = VectorField::from_fn(g, |x| [x[0] + 1.0, x[1] + 1.0, 0.0]);
        assert!(!u.is_no_slip());
        u.enforce_no_slip();
        assert!(u.is_no_slip());
    }

    #[test]
    fn mean_removal() {
        let g = Grid::square(8).unwrap();
        let mut s = ScalarField::from_fn(g, |x| x[0] * x[0] + 3.0);
        let m = s.remove_mean();
        assert!((m - (3.0 + 1.0 / 3.0 - 1.0 / (12.0 * 64.0))).abs() < 1e-12);
        assert!(s.mean().abs() < 1e-15);
    }

    #[test]
    fn component_count_checked() {
        let g = Grid::square(8).unwrap();
        assert!(VectorField::from_components(g, vec![vec![0.0; 72]]).is_err());
        assert!(VectorField::from_components(g, vec![vec![0.0; 72], vec![0.0; 71]]).is_err());
        assert!(VectorField::from_components(g, vec![vec![0.0; 72], vec![0.0; 72]]).is_ok());
    }
}
