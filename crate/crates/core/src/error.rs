use thiserror::Error;

/// Errors reported by chatterlab computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The finite-horizon Fuller construction needs `t1 >= T_F(p0) + T_F(x1, -y1)`.
    #[error("hypothesis violated: t1 = {t1} is below the required {required}")]
    HypothesisViolated { t1: f64, required: f64 },

    #[error("certificate failed at t = {time}: {reason}")]
    CertificateFailed { time: f64, reason: String },

    /// The origin is not in the relative interior of the generator hull.
    #[error("degenerate unit ball: 0 is not in the relative interior of the generator hull")]
    DegenerateBall,

    #[error("infinite length: velocity leaves the distribution near t = {time}")]
    InfiniteLength { time: f64 },

    #[error("inadmissible boundary data: {0}")]
    InadmissibleBoundary(String),

    #[error("ambient dimension {dim} is below {required}; the 7-field condition cannot hold")]
    DimensionTooSmall { dim: usize, required: usize },

    #[error("no Fuller covector: {0} condition failed")]
    NotFound(String),

    #[error("no feasible candidate reached the endpoint within {tolerance:e}")]
    NoFeasibleCandidate { tolerance: f64 },

    #[error("maximum iterations ({0}) reached before convergence")]
    MaxIterations(usize),

    #[error("numerical routine failed to converge: {0}")]
    Convergence(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
