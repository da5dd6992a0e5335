use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite entry at position {0}")]
    NonFinite(usize),

    #[error("point lies outside the cone Γ_{level}: min σ_j = {margin:e}")]
    ConeViolation { level: usize, margin: f64 },

    #[error("matrix is not symmetric (max |a_ij - a_ji| = {0:e})")]
    Asymmetric(f64),

    #[error("multi-indices overlap at entry {0}")]
    OverlappingIndices(usize),

    #[error("resolution {got} is below the minimum of {min} nodes per dimension")]
    ResolutionTooCoarse { got: usize, min: usize },

    #[error("nonpositive value {value:e} at node {node}")]
    NonPositive { node: usize, value: f64 },

    #[error("node {node} is inadmissible: cone margin {margin:e}")]
    InadmissibleNode { node: usize, margin: f64 },

    #[error("line search exhausted after {halvings} halvings at Newton iteration {iter} (residual {residual:e})")]
    LineSearchExhausted {
        iter: usize,
        halvings: usize,
        residual: f64,
    },

    #[error("Newton did not converge in {iters} iterations (residual {residual:e})")]
    NewtonMaxIterations { iters: usize, residual: f64 },

    #[error("linear solve broke down: {0}")]
    LinearSolve(String),

    #[error("continuation step underflow below {min_step:e}; last accepted t = {last_good_t}")]
    StepUnderflow { last_good_t: f64, min_step: f64 },

    #[error("γ_ε sequence is not Cauchy within {tol:e}: {sequence:?}")]
    NotCauchy { sequence: Vec<f64>, tol: f64 },

    #[error("{0}")]
    Precondition(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
