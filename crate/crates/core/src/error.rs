use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} supports at most {max} sites, got {n_sites}")]
    TooManySites {
        what: &'static str,
        n_sites: usize,
        max: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("matrix element <{row}|H|{col}> is zero; its phase is undefined")]
    ZeroElement { row: usize, col: usize },

    #[error("cannot normalize a zero vector")]
    ZeroNorm,

    #[error("state is not real up to a global phase (max imaginary part {max_imag:.3e})")]
    NotReal { max_imag: f64 },

    #[error("all amplitudes vanish: {0}")]
    DegenerateState(&'static str),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("linear solve failed (residual {residual:.3e})")]
    SolverBreakdown { residual: f64 },

    #[error("reference energy is zero; relative error undefined")]
    ZeroReference,

    #[error("all {} trials failed: {}", .0.len(), .0.join("; "))]
    AllTrialsFailed(Vec<String>),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
