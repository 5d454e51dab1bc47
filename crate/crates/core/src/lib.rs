//! Forward solver, source reconstruction and estimate audits for the
//! convective Brinkman-Forchheimer equations on the unit square.

pub mod cli;
pub mod diagnostics;
pub mod direct;
pub mod error;
pub mod fields;
pub mod inverse;

pub use error::{CbfError, Result};
