//! Fast diagonalisation of the constant-coefficient stencils by real
//! trigonometric transforms, applied one axis at a time.

use std::sync::{Arc, LazyLock, Mutex};

use rayon::prelude::*;
use rustdct::{DctPlanner, Dst1, TransformType2And3};

use super::grid::Shape;

/// Boundary treatment of one axis of a spectral layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisKind {
    /// `n` cell-centred unknowns with zero-flux ends (DCT-II basis).
    NeumannCell,
    /// `n` cell-centred unknowns with odd reflection ghosts (DST-II basis).
    DirichletCell,
    /// `n - 1` interior face unknowns with zero end values (DST-I basis).
    DirichletFace,
}

impl AxisKind {
    /// Index `m` entering `cos(pi m / n)` for spectral mode `k`.
    #[inline]
    fn wave(self, k: usize) -> usize {
        match self {
            AxisKind::NeumannCell => k,
            AxisKind::DirichletCell | AxisKind::DirichletFace => k + 1,
        }
    }

    /// Eigenvalue of the negative 3-point second difference for mode `k`.
    pub fn eigenvalue(self, k: usize, n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let theta = std::f64::consts::PI * self.wave(k) as f64 / n as f64;
        (2.0 - 2.0 * theta.cos()) / (h * h)
    }

    /// Symbol of the `(1/4, 1/2, 1/4)` face-averaging stencil for mode `k`.
    pub fn average_symbol(self, k: usize, n: usize) -> f64 {
        let theta = std::f64::consts::PI * self.wave(k) as f64 / n as f64;
        0.5 + 0.5 * theta.cos()
    }
}

static PLANNER: LazyLock<Mutex<DctPlanner<f64>>> = LazyLock::new(|| Mutex::new(DctPlanner::new()));

enum Plan {
    Type23(Arc<dyn TransformType2And3<f64>>),
    Type1(Arc<dyn Dst1<f64>>),
}

fn plan(kind: AxisKind, len: usize) -> Plan {
    let mut planner = PLANNER.lock().unwrap_or_else(|e| e.into_inner());
    match kind {
        AxisKind::NeumannCell => Plan::Type23(planner.plan_dct2(len)),
        AxisKind::DirichletCell => Plan::Type23(planner.plan_dst2(len)),
        AxisKind::DirichletFace => Plan::Type1(planner.plan_dst1(len)),
    }
}

/// Array of unknowns together with the transform basis of each active axis.
/// Axes whose extent is 1 (the third axis in 2D) are left untouched.
#[derive(Clone, Copy, Debug)]
pub struct Layout {
    pub shape: Shape,
    pub kinds: [AxisKind; 3],
    /// Number of cells per axis.
    pub n: usize,
}

impl Layout {
    fn active(&self, axis: usize) -> bool {
        self.shape.dims[axis] > 1
    }

    /// Apply the forward (`inverse = false`) or inverse transform along every
    /// active axis. The inverse is normalised so that forward then inverse is
    /// the identity.
    pub fn transform(&self, data: &mut [f64], inverse: bool) {
        for axis in 0..3 {
            if self.active(axis) {
                self.transform_axis(data, axis, inverse);
            }
        }
    }

    fn transform_axis(&self, data: &mut [f64], axis: usize, inverse: bool) {
        let dims = self.shape.dims;
        let len = dims[axis];
        let stride = self.shape.stride(axis);
        let outer: usize = dims[..axis].iter().product();
        let lines = outer * stride;
        let kind = self.kinds[axis];
        let plan = plan(kind, len);
        let scale = match kind {
            AxisKind::DirichletFace => 2.0 / (len + 1) as f64,
            _ => 2.0 / len as f64,
        };
        let start = |line: usize| (line / stride) * len * stride + line % stride;
        let source: &[f64] = data;
        let transformed: Vec<Vec<f64>> = (0..lines)
            .into_par_iter()
            .map(|line| {
                let s = start(line);
                let mut buf: Vec<f64> = (0..len).map(|j| source[s + j * stride]).collect();
                match (&plan, kind, inverse) {
                    (Plan::Type23(p), AxisKind::NeumannCell, false) => p.process_dct2(&mut buf),
                    (Plan::Type23(p), AxisKind::NeumannCell, true) => p.process_dct3(&mut buf),
                    (Plan::Type23(p), _, false) => p.process_dst2(&mut buf),
                    (Plan::Type23(p), _, true) => p.process_dst3(&mut buf),
                    (Plan::Type1(p), _, _) => p.process_dst1(&mut buf),
                }
                if inverse {
                    for v in &mut buf {
                        *v *= scale;
                    }
                }
                buf
            })
            .collect();
        for (line, buf) in transformed.iter().enumerate() {
            let s = start(line);
            for (j, v) in buf.iter().enumerate() {
                data[s + j * stride] = *v;
            }
        }
    }

    /// Multiply every spectral coefficient by `symbol(mode)`, in place, where
    /// `mode[a]` is the mode index along axis `a` (0 on inactive axes).
    pub fn apply_symbol(&self, data: &mut [f64], symbol: impl Fn([usize; 3]) -> f64) {
        self.transform(data, false);
        self.shape.for_each(|i, k| data[k] *= symbol(i));
        self.transform(data, true);
    }

    /// Eigenvalue of the negative Laplacian for a mode multi-index.
    pub fn laplace_eigenvalue(&self, mode: [usize; 3]) -> f64 {
        (0..3)
            .filter(|&a| self.active(a))
            .map(|a| self.kinds[a].eigenvalue(mode[a], self.n))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(kinds: [AxisKind; 3], dims: [usize; 3], n: usize) -> Layout {
        Layout {
            shape: Shape { dims },
            kinds,
            n,
        }
    }

    #[test]
    fn round_trip_each_kind() {
        for kind in [AxisKind::NeumannCell, AxisKind::DirichletCell, AxisKind::DirichletFace] {
            let n = 12;
            let len = if kind == AxisKind::DirichletFace { n - 1 } else { n };
            let l = layout([kind, AxisKind::NeumannCell, kind], [len, n, 1], n);
            let orig: Vec<f64> = (0..len * n).map(|k| ((k * 37 % 11) as f64) - 5.0).collect();
            let mut data = orig.clone();
            l.transform(&mut data, false);
            l.transform(&mut data, true);
            for (a, b) in data.iter().zip(&orig) {
                assert!((a - b).abs() < 1e-12, "{kind:?}");
            }
        }
    }

    #[test]
    fn dirichlet_face_modes_diagonalise_second_difference() {
        let n = 10;
        let l = layout(
            [AxisKind::DirichletFace, AxisKind::NeumannCell, AxisKind::NeumannCell],
            [n - 1, 1, 1],
            n,
        );
        let h = 1.0 / n as f64;
        let u: Vec<f64> = (1..n).map(|j| ((j * j) as f64).sin()).collect();
        let get = |j: isize| if j < 0 || j as usize >= n - 1 { 0.0 } else { u[j as usize] };
        let lap: Vec<f64> = (0..n - 1)
            .map(|j| {
                let j = j as isize;
                -(get(j - 1) - 2.0 * get(j) + get(j + 1)) / (h * h)
            })
            .collect();
        let mut symbol = u.clone();
        l.apply_symbol(&mut symbol, |m| l.laplace_eigenvalue(m));
        for (a, b) in symbol.iter().zip(&lap) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }
}
