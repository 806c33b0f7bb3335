use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("mesh construction failed: {0}")]
    Mesh(String),

    #[error("point ({0}, {1}) is outside the domain or too close to its boundary")]
    OutOfDomain(f64, f64),

    #[error("evaluation at a singular point ({0}, {1})")]
    SingularPoint(f64, f64),

    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("linear solve failed: {0}")]
    Linear(String),

    #[error("eigenvalue solve failed: {0}")]
    Eigen(String),

    #[error("Newton iteration did not converge: residual {residual:.3e} after {iters} iterations")]
    NotConverged { residual: f64, iters: usize },

    #[error("continuation step size underflow at arc index {0}")]
    StepUnderflow(usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
