use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: String },

    #[error("time {t} outside the protocol window [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },

    #[error("truncation too small: tail population {tail:.3e} at N = {dim}; use N >= {required}")]
    TruncationTooSmall {
        dim: usize,
        required: usize,
        tail: f64,
    },

    #[error("propagator accuracy: unitarity defect {defect:.3e} with {steps} steps")]
    Accuracy { defect: f64, steps: usize },

    #[error("operator is not Hermitian (relative defect {0:.3e})")]
    NotHermitian(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("internal consistency: {0}")]
    Consistency(String),

    #[error(
        "equilibrium inverse ill-conditioned: population {population:.3e} at occupied level {level}; \
         lower beta or N"
    )]
    IllConditioned { level: usize, population: f64 },

    #[error("hbar scan invalid: {0}")]
    ScanInvalid(String),

    #[error("near-degenerate spectrum: gap {gap:.3e} above level {level}")]
    Degenerate { level: usize, gap: f64 },

    #[error("phase grid coverage: {0}")]
    Coverage(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Truncation and discretization failures, as opposed to logic or
    /// consistency failures. The CLI maps these to their own exit code.
    pub fn is_accuracy(&self) -> bool {
        matches!(
            self,
            Error::TruncationTooSmall { .. }
                | Error::Accuracy { .. }
                | Error::IllConditioned { .. }
                | Error::Coverage(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
