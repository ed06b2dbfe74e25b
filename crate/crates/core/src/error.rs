use thiserror::Error;

/// Errors raised by the spectral-flow engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("expression is not differentiable: {0}")]
    NotDifferentiable(String),

    #[error("x-dependent coefficients are not supported here: {0}")]
    XDependentUnsupported(String),

    #[error("endpoint operator is singular at lambda = {lambda}")]
    InvalidEndpoint { lambda: f64 },

    #[error("endpoint linearization has a nontrivial solution at lambda = {lambda}")]
    EndpointSingular { lambda: f64 },

    #[error("crossings at {0} and {1} are closer than the scan resolution")]
    DegenerateCrossing(f64, f64),

    #[error("candidate roots at {0} and {1} cannot be separated")]
    UnresolvedCluster(f64, f64),

    #[error("irregular crossing(s) at lambda = {0:?}")]
    IrregularCrossing(Vec<f64>),

    #[error("galerkin spectral flow not stable up to n = {n_max}")]
    NotConverged { n_max: usize },

    #[error("integration failed at x = {x}: step size underflow")]
    IntegrationFailure { x: f64 },

    #[error("Gamma(alpha, beta) requires alpha > beta (got {alpha} <= {beta})")]
    InvalidOrder { alpha: f64, beta: f64 },

    #[error("no nontrivial branch found near lambda = {lambda}")]
    NoBranch { lambda: f64 },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
