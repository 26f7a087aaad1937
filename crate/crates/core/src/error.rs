use std::io;

use thiserror::Error;

use crate::field::Space;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("expected a field in {expected:?} space, found {found:?}")]
    WrongSpace { expected: Space, found: Space },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("value count {found} does not match grid size {expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("argument rejected: {0}")]
    Rejected(String),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error(
        "boundary leak at t = {time}: boundary amplitude {amplitude:e} exceeds {threshold:e} x sup norm"
    )]
    Leak {
        time: f64,
        amplitude: f64,
        threshold: f64,
    },
    #[error("solution became non-finite at t = {time}")]
    BlowUp { time: f64 },
    #[error("malformed field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
