//! Audits of the a priori estimates along computed runs and the
//! two-experiment stability study.

mod energy;
mod stability;
pub mod tables;

pub use energy::{
    audit_energy_bound, audit_strong_bound, audit_time_derivative_bound, energy_profile, energy_report,
    energy_tolerance, refinement_ratios, refinement_stable, strong_norm, EnergyProfile, EnergyReport, EstimateInputs,
    EstimateKind, LedgerEntry, Quadrature,
};
pub use stability::{
    compare_outcomes, reconstruct_bundle, stability_experiment, stability_sweep, BundleOutcome, DataBundle, LhsTerms,
    ReconstructionSummary, RhsTerms, ScalingRow, StabilityConfig, StabilityReport, StabilitySweep,
};
