use std::io;
use std::path::{Path, PathBuf};

use modscatter_core::Error as CoreError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver aborted: {0}")]
    Solver(CoreError),
    #[error("run directory {}: {msg}", path.display())]
    RunDir { path: PathBuf, msg: String },
    #[error("analysis failed: {0}")]
    Analysis(CoreError),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::RunDir { .. } => EXIT_CONFIG,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Verification(_) => EXIT_VERIFY,
            CliError::Analysis(_) | CliError::Io { .. } => EXIT_OTHER,
        }
    }

    /// Sorts a solver-side error into config problems and run aborts.
    pub fn from_core(err: CoreError) -> Self {
        match err {
            CoreError::Leak { .. } | CoreError::BlowUp { .. } | CoreError::NonFinite => {
                CliError::Solver(err)
            }
            other => CliError::Config(other.to_string()),
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
