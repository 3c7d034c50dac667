use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "kernel matrix is ill-conditioned: factorization failed with jitter up to {max_jitter:e} \
         (minimum eigenvalue estimate {min_eigenvalue:e})"
    )]
    IllConditioned { min_eigenvalue: f64, max_jitter: f64 },

    #[error("evidence underflow: log Z = {log_value} is below the representable range; inspect the log-domain value")]
    Underflow { log_value: f64 },

    #[error("rejection sampling exceeded {attempts} attempts (acceptance rate {acceptance_rate:e}); the threshold is probably too high")]
    RejectionCap { attempts: usize, acceptance_rate: f64 },

    #[error("superlevel set is empty: no scan point has density above {threshold:e}")]
    EmptyRegion { threshold: f64 },

    #[error("point {point:?} lies outside the stored grid")]
    Extrapolation { point: Vec<f64> },

    #[error("log-density is NaN at {point:?}")]
    NotANumber { point: Vec<f64> },

    #[error("linear solver failed: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}
