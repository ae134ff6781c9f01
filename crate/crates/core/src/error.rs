use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown system id `{0}`")]
    UnknownSystem(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("system `{system}` requires parameter `{name}`")]
    MissingParameter { system: String, name: String },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: String,
        value: f64,
        reason: String,
    },

    #[error("no exact solution registered for `{0}`")]
    NoExactSolution(String),

    #[error("no closed-form oracle for `{system}` with {descriptor}")]
    NoOracle { system: String, descriptor: String },

    #[error("trajectory blew up after t = {last_time}")]
    BlowUp { last_time: f64 },

    #[error("step/horizon inconsistency: {0}")]
    StepHorizon(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("too few samples: {0}")]
    TooFewSamples(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("format version mismatch: expected `{expected}`, found `{found}`")]
    Version { expected: String, found: String },

    #[error("row count mismatch: expected {expected}, found {found}")]
    RowCount { expected: usize, found: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by bad user input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::BlowUp { .. } | Error::Io(_))
    }
}
