use thiserror::Error;

/// Errors raised by the beamforming toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("codebook index {index} out of range 1..={max}")]
    InvalidIndex { index: u64, max: u64 },

    #[error("combiner has no linearly independent column")]
    SingularCombiner,

    #[error("cost value {0} is below 1; numerical breakdown")]
    Domain(f64),

    #[error("full search needs {required} evaluations, ceiling is {ceiling}")]
    BudgetExceeded { required: u64, ceiling: u64 },

    #[error("no valid candidate exists: {0}")]
    Infeasible(String),

    #[error("current solution has no admissible neighbor")]
    DegenerateNeighborhood,

    #[error("nothing to emit")]
    EmptyOutput,

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
