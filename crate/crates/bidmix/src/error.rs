use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty sample store for configuration {config}")]
    EmptyStore { config: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("solver stalled: pivot cap exceeded after {iterations} iterations")]
    SolverStalled { iterations: usize },

    #[error("saddle solve failed to converge within {iterations} cuts (gap {gap:.3e})")]
    SaddleStalled { iterations: usize, gap: f64 },

    #[error("trace error: {0}")]
    Trace(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
