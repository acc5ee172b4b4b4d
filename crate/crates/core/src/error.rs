use thiserror::Error;

/// Errors surfaced by the numerical kernels.
#[derive(Error, Debug)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("boundary label {label} not available on this grid")]
    UnknownBoundary { label: String },

    #[error("CFL condition violated: dt = {dt} exceeds limit {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("non-finite value detected at time step {step}")]
    NonFinite { step: usize },

    #[error("eigensolver failed: {0}")]
    EigenFailure(String),

    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),

    #[error("kernel value at t=0 is too small (|lambda(0)| = {value:.3e}); the deconvolution is ill-posed")]
    SingularKernel { value: f64 },

    #[error("series does not vanish at t=0: |y(0)| = {value:.3e}")]
    NonZeroStart { value: f64 },

    #[error("rank-deficient dictionary: condition number {cond:.3e}")]
    RankDeficient { cond: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("iteration stagnated: {0}")]
    Stagnation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
