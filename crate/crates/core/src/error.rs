use thiserror::Error;

/// Errors raised by the solver and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not symmetric: {0}")]
    NotSymmetric(String),

    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("indefinite operator: <p, Ap> = {curvature:e} at iteration {iteration}")]
    IndefiniteOperator { iteration: usize, curvature: f64 },

    #[error(
        "inner solve failed to reach relative tolerance {tolerance:e} within {iterations} iterations (relative residual {residual:e})"
    )]
    InnerSolveFailed {
        tolerance: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("problem size {n} exceeds the dense analysis limit {limit} (set DEFLATRON_DENSE_LIMIT to override)")]
    SizeLimit { n: usize, limit: usize },

    #[error("cannot separate the kernel of the deflated operator: {0}")]
    ZeroClassification(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("matrix market parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
