use thiserror::Error;

/// Errors raised by estimation, scoring, oracle and simulation routines.
#[derive(Debug, Error)]
pub enum FicError {
    /// Malformed input row; `row` is 1-based and counts data rows after the header.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("covariate dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A required covariance block is not invertible at an event time.
    #[error("singular covariate matrix at time {time}")]
    Singular { time: f64 },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("weight point {index} (x = {x:?}, t = {t}) is infeasible: {reason}")]
    InfeasiblePoint {
        index: usize,
        x: Vec<f64>,
        t: f64,
        reason: String,
    },

    #[error("no feasible candidate model")]
    AllInfeasible,

    #[error("quadrature did not converge: achieved error estimate {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("{dropped} of {reps} replications had a singular design before t")]
    TooManySingular { dropped: usize, reps: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FicError>;
