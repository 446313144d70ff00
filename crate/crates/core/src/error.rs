use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("negative distance {value} at ({row}, {col})")]
    NegativeDistance { row: usize, col: usize, value: f64 },

    #[error("distance table is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },

    #[error("cluster budget k={k} is invalid for m={m} candidate centers")]
    InvalidBudget { k: usize, m: usize },

    #[error("triangle inequality violated: {0}")]
    TriangleViolation(String),

    #[error("solution has no open centers")]
    EmptySolution,

    #[error("center index {index} out of range (m = {m})")]
    CenterOutOfRange { index: usize, m: usize },

    #[error("instance too large for enumeration: {count} candidate subsets (limit {limit})")]
    TooLarge { count: u128, limit: u128 },

    #[error("unsupported instance: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear program is infeasible for gamma = {gamma}; raise rho")]
    Infeasible { gamma: f64 },

    #[error("linear program solver failed: {0}")]
    Solver(String),

    #[error("rounding invariant violated at {step}: {detail}")]
    Rounding { step: &'static str, detail: String },
}
