use serde::{Deserialize, Serialize};

use crate::error::{CbfError, Result};

/// Logical extent of a (possibly degenerate) three-axis array, stored row-major
/// with the x index slowest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub dims: [usize; 3],
}

impl Shape {
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: [usize; 3]) -> usize {
        (i[0] * self.dims[1] + i[1]) * self.dims[2] + i[2]
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => self.dims[1] * self.dims[2],
            1 => self.dims[2],
            _ => 1,
        }
    }

    /// Visit every multi-index in storage order.
    pub fn for_each(&self, mut f: impl FnMut([usize; 3], usize)) {
        let mut k = 0;
        for i in 0..self.dims[0] {
            for j in 0..self.dims[1] {
                for l in 0..self.dims[2] {
                    f([i, j, l], k);
                    k += 1;
                }
            }
        }
    }
}

/// Uniform staggered grid on the unit square (dim = 2) or unit cube (dim = 3).
///
/// Cell centres sit at `(i + 1/2) h`; the velocity component along axis `c`
/// lives on the faces normal to `c`, at `i h` along that axis and at cell-centre
/// positions along the others.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
}

impl Grid {
    pub const MIN_CELLS: usize = 8;

    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(CbfError::Parameter(format!("dim must be 2 or 3, got {dim}")));
        }
        if n < Self::MIN_CELLS {
            return Err(CbfError::Parameter(format!(
                "grid needs at least {} cells per axis, got {n}",
                Self::MIN_CELLS
            )));
        }
        if (1.0 / n as f64) * n as f64 != 1.0 {
            return Err(CbfError::Parameter(format!(
                "h * n is not exactly 1 in floating point for n = {n}"
            )));
        }
        Ok(Grid { dim, n })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(2, n)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Quadrature weight of one cell, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn num_cells(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn cell_shape(&self) -> Shape {
        let n = self.n;
        Shape {
            dims: if self.dim == 2 { [n, n, 1] } else { [n, n, n] },
        }
    }

    /// Storage shape for the velocity component normal to `axis`.
    pub fn face_shape(&self, axis: usize) -> Shape {
        let mut s = self.cell_shape();
        s.dims[axis] += 1;
        s
    }

    pub fn cell_center(&self, i: [usize; 3]) -> [f64; 3] {
        let h = self.h();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = (i[a] as f64 + 0.5) * h;
        }
        x
    }

    pub fn face_center(&self, axis: usize, i: [usize; 3]) -> [f64; 3] {
        let mut x = self.cell_center(i);
        x[axis] = i[axis] as f64 * self.h();
        x
    }

    /// Grid with twice the resolution of this one.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Grid::new(self.dim, self.n * factor)
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(CbfError::Shape(format!(
                "grid mismatch: {}D n={} vs {}D n={}",
                self.dim, self.n, other.dim, other.n
            )));
        }
        Ok(())
    }
}
