//! Orchestration for modified-scattering experiments: run directories,
//! report files, the verification suite and parameter sweeps.

pub mod analyze;
pub mod error;
pub mod rundir;
pub mod sweep;
pub mod verify;

pub use error::{CliError, CliResult};
