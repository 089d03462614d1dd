use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("mode {mode} out of range for {mode_count} modes")]
    ModeOutOfRange { mode: usize, mode_count: usize },

    #[error("duplicate mode {0}")]
    DuplicateMode(usize),

    #[error("reflectivity {0} outside [0, 1]")]
    Reflectivity(f64),

    #[error("overlap xi = {0} outside [0, 1]")]
    Overlap(f64),

    #[error("qubit amplitudes not normalized (|a|^2 + |b|^2 = {0})")]
    NotNormalized(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("target {target} outside attainable range [{low}, {high}]")]
    CalibrationRange { target: f64, low: f64, high: f64 },

    #[error("tomography input: {0}")]
    Tomography(String),

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
