use thiserror::Error;

use crate::graph::VertexId;

/// Errors raised by graph enumeration, estimation and simulation.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("vertex {vertex} reports {size} adjacent vertices, above the cap of {cap}")]
    AdjacencyCap {
        vertex: VertexId,
        size: usize,
        cap: usize,
    },

    #[error("vertex budget of {budget} exceeded after enumerating {reached} vertices; raise the budget or shrink the radius")]
    BudgetExceeded { reached: usize, budget: usize },

    #[error("vertex {0} is not present in the ball")]
    MissingVertex(VertexId),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("Dirichlet form is singular beyond the constants (double ball is disconnected)")]
    SingularDirichletForm,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown graph family `{0}`")]
    UnknownGraph(String),

    #[error("truncation not converged after {retries} retries (max difference {difference:e})")]
    TruncationNotConverged { retries: usize, difference: f64 },

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("left perturbative regime at t = {t}: max deviation {deviation}")]
    LeftPerturbativeRegime { t: f64, deviation: f64 },

    #[error("norm vanishes at t = {t} inside the fit window (trivial solution?)")]
    ZeroNorm { t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
