//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A column fell below the drop tolerance during orthonormalization.
    #[error("rank deficient input (column {column})")]
    RankDeficient { column: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A vertex has zero degree and no regularization was requested.
    #[error("vertex {0} is isolated and tau = 0")]
    IsolatedVertex(usize),

    #[error("convergence rate must exceed 1 (got {0})")]
    InvalidRate(f64),

    #[error("nonpositive denominator {0:e} in convergence ratio")]
    NonpositiveDenominator(f64),

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("invalid edit batch: {0}")]
    InvalidEdit(String),

    /// Relative degree change of an edit batch reached 1.
    #[error("degree change too large (alpha = {0})")]
    DegreeViolation(f64),

    #[error("eigengap too small for the bound (denominator {0:e})")]
    GapTooSmall(f64),

    #[error("window {window} is invalid for a series of length {len}")]
    BadWindow { window: usize, len: usize },

    #[error("averaging window {window} exceeds series length {len}")]
    WindowTooLarge { window: usize, len: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("edge stream is empty")]
    EmptyStream,

    /// No admissible edit exists in the requested direction.
    #[error("no admissible edit left")]
    Exhausted,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
