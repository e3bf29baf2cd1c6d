use thiserror::Error;

/// Errors raised across the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("block M_{0} contains no prime; enlarge U0")]
    EmptyBlock(usize),

    #[error("nodes {0} and {1} coincide within machine tolerance")]
    DegenerateNodes(usize, usize),

    #[error("target |z| = {modulus} exceeds the reachable radius {reach}")]
    Unreachable { modulus: f64, reach: f64 },

    #[error("no two-group split reaches |z| = {modulus}; minimum reachable modulus is {min_reach}")]
    InfeasiblePartition { modulus: f64, min_reach: f64 },

    #[error("final residual {residual:.3e} is not below eps = {eps}; constants too small")]
    ResidualExceeded { residual: f64, eps: f64 },

    #[error("zeta has a pole at s = 1")]
    PoleAt1,

    #[error("requested tolerance {0:e} is not reachable")]
    ToleranceUnreachable(f64),

    #[error("branch tracking path passes through or near a zero or pole near s = {re} + {im}i")]
    PathThroughZero { re: f64, im: f64 },

    #[error("rectangle boundary passes within tolerance of a zero near s = {re} + {im}i")]
    BoundaryZero { re: f64, im: f64 },

    #[error("zero list covers ordinates up to {covered}, need at least {needed}")]
    InsufficientZeros { covered: f64, needed: f64 },

    #[error("quadrature error estimate {0:e} above tolerance")]
    QuadratureFailure(f64),

    #[error("Cauchy quadrature did not converge (last change {0:e})")]
    NoConvergence(f64),

    #[error("b_0 must be nonzero")]
    RejectZeroB0,

    #[error("scan produced no Taylor-matching shift in the window")]
    NoHits,

    #[error("window violates T^nu <= H <= T: need H >= {min_h:.4} and H <= {max_h}, got H = {h}")]
    WindowConstraint { min_h: f64, max_h: f64, h: f64 },

    #[error("value overflows f64; log-value is {0}")]
    Overflow(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
