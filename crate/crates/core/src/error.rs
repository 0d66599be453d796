use thiserror::Error;

/// Errors surfaced by model construction and the solvers.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid probability data: {0}")]
    InvalidProbability(String),

    #[error("invalid parameter {name}: {value} ({expected})")]
    InvalidParameter {
        name: String,
        value: f64,
        expected: String,
    },

    #[error("signal {signal} has zero probability; posterior undefined")]
    NullSignal { signal: String },

    #[error("zero-probability conditioning cell {cell}; smooth the strategy before fitting")]
    NullConditioningCell { cell: String },

    #[error("solver did not converge: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;
