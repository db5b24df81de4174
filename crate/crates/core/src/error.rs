use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("column {0} has (numerically) zero norm")]
    ZeroColumn(usize),

    #[error("iteration did not converge: {what} (residual {residual:e})")]
    ConvergenceFailure { what: &'static str, residual: f64 },

    #[error("matrix is not positive semidefinite at pivot {pivot}{note}")]
    NotPositiveSemiDefinite { pivot: usize, note: String },

    #[error("matrix is rank deficient: R diagonal {value:e} at column {column}")]
    RankDeficient { column: usize, value: f64 },

    #[error("dimension error: {0}")]
    DimensionError(String),

    #[error("infeasible s: smallest eigenvalue of 2*Sigma - diag(s) is {min_eigenvalue:e}")]
    InfeasibleS { min_eigenvalue: f64 },

    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),

    #[error("invalid epsilon grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{0}")]
    AssertionFailure(Box<crate::simbench::VerificationReport>),

    #[error("trial failed at {axis}={axis_value}, method {method}, trial {trial}: {source}")]
    Trial {
        axis: String,
        axis_value: f64,
        method: String,
        trial: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn not_psd(pivot: usize) -> Self {
        Error::NotPositiveSemiDefinite {
            pivot,
            note: String::new(),
        }
    }

    pub(crate) fn dims(msg: impl fmt::Display) -> Self {
        Error::DimensionError(msg.to_string())
    }

    pub(crate) fn invalid(msg: impl fmt::Display) -> Self {
        Error::InvalidInput(msg.to_string())
    }
}
