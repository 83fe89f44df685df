use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid interval: {0}")]
    InvalidInterval(String),

    #[error("grid functions live on different intervals")]
    DomainMismatch,

    #[error("argument out of domain: {0}")]
    DomainError(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value {target} not attained by the monotone function below the bracket cap {cap:e}")]
    OutOfRange { target: f64, cap: f64 },

    #[error("function is not monotone on the scanned range; cannot invert")]
    NonMonotone,

    #[error("integral of f(x,w)w is {integral}, below the range of G (G(0) = 0)")]
    NegativeMass { integral: f64 },

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("pair is not a verified sub-supersolution pair (worst margin {worst_margin:e})")]
    NotVerified { worst_margin: f64 },

    #[error("lower function exceeds upper function at node {node} by {gap:e}")]
    OrderViolated { node: usize, gap: f64 },

    #[error("boundary sign condition lower <= 0 <= upper fails at node {node}")]
    BoundaryViolated { node: usize },

    #[error("scheme {scheme} requires f nondecreasing in u")]
    SchemeRequiresMonotone { scheme: &'static str },

    #[error("no witness found in the searched parameter range")]
    NoWitness,

    #[error("no positive solution exists for lambda = {lambda} <= 0")]
    NoPositiveSolution { lambda: f64 },

    #[error("no admissible epsilon found above {floor:e}")]
    NoEpsilon { floor: f64 },

    #[error("lambda = {lambda} is not below the estimated threshold lambda0 = {lambda0}")]
    LambdaTooLarge { lambda: f64, lambda0: f64 },

    #[error("lambda = {lambda} does not exceed lambda1 * m_inf = {threshold}")]
    LambdaBelowThreshold { lambda: f64, threshold: f64 },

    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable snake_case name of the variant, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInterval(_) => "invalid_interval",
            Error::DomainMismatch => "domain_mismatch",
            Error::DomainError(_) => "domain_error",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::OutOfRange { .. } => "out_of_range",
            Error::NonMonotone => "non_monotone",
            Error::NegativeMass { .. } => "negative_mass",
            Error::NoConvergence { .. } => "no_convergence",
            Error::NotVerified { .. } => "not_verified",
            Error::OrderViolated { .. } => "order_violated",
            Error::BoundaryViolated { .. } => "boundary_violated",
            Error::SchemeRequiresMonotone { .. } => "scheme_requires_monotone",
            Error::NoWitness => "no_witness",
            Error::NoPositiveSolution { .. } => "no_positive_solution",
            Error::NoEpsilon { .. } => "no_epsilon",
            Error::LambdaTooLarge { .. } => "lambda_too_large",
            Error::LambdaBelowThreshold { .. } => "lambda_below_threshold",
            Error::Csv(_) => "csv",
        }
    }
}
