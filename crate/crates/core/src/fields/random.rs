//! Seeded random fields.
//!
//! The generator is xoshiro256** seeded through SplitMix64 (the reference
//! seeding of `rand_xoshiro`). A uniform `f64` in `[0, 1)` is
//! `(next_u64() >> 11) * 2^-53`; every field is filled in storage order,
//! component by component, so any reimplementation of the generator
//! reproduces the same samples.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use super::field::{ScalarField, VectorField};
use super::grid::Grid;
use super::projection::project;
use crate::error::Result;

pub struct FieldRng {
    inner: Xoshiro256StarStar,
}

impl FieldRng {
    pub fn new(seed: u64) -> Self {
        FieldRng {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform sample in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform sample in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Cell values uniform in `[-1, 1)`.
    pub fn scalar(&mut self, grid: Grid) -> ScalarField {
        let data = (0..grid.cell_shape().len()).map(|_| self.uniform(-1.0, 1.0)).collect();
        ScalarField::from_vec(grid, data).expect("length matches grid")
    }

    /// Face values uniform in `[-1, 1)` on every face, boundary included.
    pub fn vector(&mut self, grid: Grid) -> VectorField {
        let comps = (0..grid.dim())
            .map(|c| {
                (0..grid.face_shape(c).len())
                    .map(|_| self.uniform(-1.0, 1.0))
                    .collect()
            })
            .collect();
        VectorField::from_components(grid, comps).expect("lengths match grid")
    }

    pub fn no_slip(&mut self, grid: Grid) -> VectorField {
        let mut v = self.vector(grid);
        v.enforce_no_slip();
        v
    }

    /// Leray projection of a random face field.
    pub fn solenoidal(&mut self, grid: Grid) -> Result<VectorField> {
        project(&self.vector(grid))
    }
}
