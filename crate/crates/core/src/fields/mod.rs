//! Staggered-grid fields, stencils and the discrete Helmholtz-Hodge splitting.

pub mod field;
pub mod grid;
pub mod helmholtz;
pub mod io;
pub mod linalg;
pub mod norms;
pub mod ops;
pub mod poisson;
pub mod projection;
pub mod random;
pub mod spectral;
pub mod transfer;

pub use field::{ScalarField, VectorField};
pub use grid::{Grid, Shape};
pub use norms::{h1_semi, h1_semi_sq, lp, lp_pow, scalar_norms, vector_norms, Norms};
pub use ops::{advect, damping, divergence, gradient, laplacian, weighted_norm_sq};
pub use poisson::{poisson_solve, PoissonBc, PoissonSolution};
pub use projection::{leray_project, project, Projection};
pub use random::FieldRng;
