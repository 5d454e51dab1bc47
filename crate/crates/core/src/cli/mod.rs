//! Batch front end: configuration, manufactured cases and experiment drivers.

pub mod config;
pub mod manufactured;
pub mod run;

pub use config::{load_config, parse_config, parse_config_in, Mode, RunConfig};
pub use run::{build_problem, run, Check, RunOutcome, EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_PASS};
