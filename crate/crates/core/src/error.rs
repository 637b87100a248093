use thiserror::Error;

pub type Result<T, E = QdError> = std::result::Result<T, E>;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum QdError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("inverse image did not converge for target {0}")]
    NonConvergedInverse(String),
    #[error("rejection sampling found {found} of {requested} points within budget")]
    EmptyDomain { found: usize, requested: usize },
    #[error("hole enlargement cannot fit: {0}")]
    DegenerateGap(String),

    #[error("pole at jet center")]
    PoleAtCenter,
    #[error("jets are centered at different points")]
    CenterMismatch,
    #[error("inner jet constant terms do not match the outer center (gap {0:e})")]
    CenterChainMismatch(f64),
    #[error("derivative order {requested} exceeds jet order {available}")]
    OrderExceeded { requested: usize, available: usize },

    #[error("pole hit while evaluating expression")]
    PoleHit,
    #[error("newton iteration did not converge after {0} steps")]
    NoConvergence(usize),
    #[error("singular jacobian")]
    SingularJacobian,

    #[error("point outside domain")]
    OutsideDomain,
    #[error("least-squares level ill-conditioned (condition estimate {0:e})")]
    IllConditioned(f64),

    #[error("jacobian determinant vanishes at node {0}")]
    SingularJacobianAtNode(usize),
    #[error("collection needs derivatives of order {needed}, jet order is {order}")]
    OrderOverflow { needed: usize, order: usize },
    #[error("span representation of the jacobian deviates by {0:e} on the validation grid")]
    URepresentationMismatch(f64),

    #[error("quadrature weights sum to {got}, expected volume {expected}")]
    SchemeVolumeMismatch { expected: f64, got: f64 },

    #[error("map does not fix the origin (|f(0)| = {0:e})")]
    NotOriginFixing(f64),
    #[error("rescaling schedule infeasible: {0}")]
    ScheduleInfeasible(String),
    #[error("injectivity scan failed: {0}")]
    UnivalenceSampleFailure(String),
    #[error("deformation recipe invalid: {0}")]
    RecipeInvalid(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}
