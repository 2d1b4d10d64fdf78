use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {what} expects {expected} samples, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite sample in {0}")]
    NonFinite(&'static str),

    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),

    #[error("unsupported: {0}")]
    Unsupported(&'static str),

    #[error("time step {dt:e} exceeds the stability bound {bound:e} ({what})")]
    Stability {
        what: &'static str,
        dt: f64,
        bound: f64,
    },

    #[error("incompatible source term: |integral(rho)| / integral(|rho|) = {ratio:e} exceeds tolerance {tol:e}")]
    Incompatible { ratio: f64, tol: f64 },

    #[error("cannot balance: {0}")]
    Unbalanceable(String),

    #[error("flow does not close at the right boundary: defect {defect:e} exceeds {tol:e}")]
    Unclosed { defect: f64, tol: f64 },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
