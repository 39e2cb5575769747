use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric (|a_ij - a_ji| = {0:e})")]
    NonSymmetric(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("sample is not sorted in non-decreasing order")]
    Unsorted,

    #[error("tail of the half-line integral did not converge (estimated tail {tail:e} at cutoff {cutoff:e})")]
    NonconvergentTail { tail: f64, cutoff: f64 },

    #[error("adaptive quadrature did not reach tolerance (error estimate {0:e})")]
    QuadratureNonconvergence(f64),

    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),

    #[error("moment does not exist: p = {p} but moments of order p only exist for p < r = {r}")]
    MomentDoesNotExist { p: f64, r: f64 },

    #[error("operation requires an isotropic spec")]
    NotIsotropic,

    #[error("operation requires a uniform measure on a convex body")]
    NotUniform,

    #[error("covariance matrix is singular or not positive definite (min eigenvalue {0:e})")]
    SingularCovariance(f64),

    #[error("degenerate projection: rank {rank} < {required}")]
    DegenerateProjection { rank: usize, required: usize },

    #[error("scale limit exceeded: {0}")]
    ScaleLimit(String),

    #[error("convexity certificate violated: {0}")]
    CertificateViolation(String),

    #[error("budget exhausted after {oracle_calls} oracle calls")]
    BudgetExhausted { oracle_calls: u64 },

    #[error("density is only known up to an additive constant in log-space (unnormalized value {unnormalized})")]
    UnknownNormalization { unnormalized: f64 },

    #[error("vanishing variance")]
    VanishingVariance,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
