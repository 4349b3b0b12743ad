use thiserror::Error;

use crate::graph::Vertex;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid vertex sets: {0}")]
    InvalidSets(String),

    #[error("vertex {0} is not in the graph universe")]
    UnknownVertex(Vertex),

    #[error("operation needs a finite graph or relation: {0}")]
    NotFinite(String),

    #[error("ground set has {size} elements, above the cap of {cap}; enable sampling or raise the cap")]
    GroundSetTooLarge { size: usize, cap: usize },

    #[error("asymmetric adjacency: {0} lists {1} but not the other way round")]
    AsymmetricAdjacency(Vertex, Vertex),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("covariance block is not positive definite (smallest eigenvalue {lambda_min:e})")]
    NotPositiveDefinite { lambda_min: f64 },

    #[error("conditioning block is ill-conditioned (condition number {condition:e}, smallest eigenvalue {lambda_min:e})")]
    IllConditioned { condition: f64, lambda_min: f64 },

    #[error("envelope violated at ({i}, {j}): |cov| = {cov:e} > g0 = {bound:e}")]
    EnvelopeViolated { i: usize, j: usize, cov: f64, bound: f64 },

    #[error("unsupported model class: {0}")]
    ModelClass(String),

    #[error("regime violated: {0}")]
    Regime(String),

    #[error("search budget of {0} vertices exhausted before an answer was reached")]
    BudgetExhausted(usize),

    #[error("report schema mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: String, found: String },
}

pub type Result<T> = std::result::Result<T, Error>;
