use thiserror::Error;

/// Errors raised by lattice construction, energy evaluation and the cell solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid coefficient field: {0}")]
    InvalidField(String),

    #[error("lattice function has no value at required site {site:?}")]
    IncompleteFunction { site: Vec<i64> },

    #[error("spin value {value} at site {site:?} is not +1 or -1")]
    InvalidSpin { site: Vec<i64>, value: f64 },

    #[error("incompatible lattice functions: {0}")]
    IncompatibleFunctions(String),

    #[error("problem too large for exhaustive search: {count} (limit {limit})")]
    TooLarge { count: usize, limit: usize },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("closed-form check failed: computed {computed}, expected {expected}")]
    ClosedFormMismatch { computed: f64, expected: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
