use thiserror::Error;

/// Errors produced anywhere in the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("graph generation failed after {attempts} attempts (V={vertex_count}, d={degree})")]
    GenerationFailure {
        vertex_count: usize,
        degree: usize,
        attempts: usize,
    },

    #[error("enumeration budget exceeded: {required} steps required, budget is {budget}")]
    BudgetExceeded { required: f64, budget: u64 },

    #[error("dimension mismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigen solver failure: {0}")]
    SolverFailure(String),

    #[error("argument {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("quadrature did not reach tolerance: estimate {estimate}, error {error}")]
    QuadratureFailure { estimate: f64, error: f64 },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("non-finite estimate at x = {x}")]
    NonFinite { x: f64 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
