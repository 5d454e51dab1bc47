//! Source reconstruction from final-time data: the operators `A` and `B`,
//! the successive-approximation driver, and the viscosity admissibility check.

mod admissibility;
mod data;
mod fixed_point;
mod lambda1;
mod operators;
mod twin;

pub use admissibility::{
    check_admissibility, check_admissibility_values, thresholds, AdmissibilityVerdict, ConditionKind, ConditionResult,
};
pub use data::{OverdeterminationData, DATA_DIV_TOL};
pub use fixed_point::{fixed_point_solve, fixed_point_solve_observed, FixedPointOptions, ReconstructionReport};
pub use lambda1::{estimate_lambda1, lambda1_mode, Lambda1Estimate, LAMBDA1_TOL};
pub use operators::{
    apply_a, apply_b, apply_b_stationary, divide_by_g, pressure_data_discrepancy, stationary_part, ForwardModel,
};
pub use twin::{synthetic_twin, TwinExperiment};
