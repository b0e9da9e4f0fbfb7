use thiserror::Error;

/// Unified error type for the library.
///
/// Construction-time validation failures (`InvalidParameter`, `LengthMismatch`,
/// `NonPositiveSpectrum`, ...) are distinguished from numerical failures
/// (`ToleranceNotAchieved`, `ExtrapolationFailed`, `LowEffectiveSampleSize`)
/// so the CLI can map them to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("level mismatch: expected 2j = {expected}, got 2j = {got}")]
    LevelMismatch { expected: u32, got: u32 },

    #[error("length mismatch: expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("spectrum entry {index} is not strictly positive (value {value})")]
    NonPositiveSpectrum { index: usize, value: f64 },

    #[error("matrix is not {kind} within tolerance {tol:e}: residual {residual:e}")]
    HermiticityViolation {
        kind: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("eigenvalue lists must be strictly increasing and distinct for the closed form")]
    DegenerateEigenvalues,

    #[error("dimension {n} exceeds the supported maximum {max} for this oracle")]
    DimensionTooLarge { n: usize, max: usize },

    #[error("quadrature tolerance not achieved: requested {requested:e}, achieved {achieved:e}")]
    ToleranceNotAchieved { requested: f64, achieved: f64 },

    #[error("degeneracy extrapolation failed to converge: residual {residual:e} > tol {tol:e}")]
    ExtrapolationFailed { residual: f64, tol: f64 },

    #[error("determinant factorization failed: {0}")]
    FactorizationFailed(String),

    #[error("effective sample size too low: {ess:.1} of {n} samples (threshold {threshold:.1})")]
    LowEffectiveSampleSize { ess: f64, n: u64, threshold: f64 },

    #[error("finite-difference step {h:e} unusable at spectrum entry {index}: drives it non-positive or below f64 resolution")]
    StepUnderflow { h: f64, index: usize },

    #[error("at level 2j = {twice_j}: {source}")]
    AtLevel {
        twice_j: u32,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps an error with the level it occurred at (used by resummation).
    pub fn at_level(self, twice_j: u32) -> Error {
        Error::AtLevel {
            twice_j,
            source: Box::new(self),
        }
    }
}
