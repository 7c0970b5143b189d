//! Batch front end for the bpg solver: instance files, synthetic instance
//! generation, multi-start solves and smad certificate checks.

pub mod check;
pub mod error;
pub mod generate;
pub mod instance;
pub mod run;

pub use check::{check_instance, run_check, CheckOutcome, CheckSpec};
pub use error::{CliError, Result};
pub use generate::{generate_instance, GenerateParams, MeasurementKind};
pub use instance::{Encoding, InstanceFile, RegularizerSpec, SCHEMA_VERSION};
pub use run::{prepare, run_from_spec, start_point, LambdaSpec, RunOutcome, RunSpec, StartOutcome};
