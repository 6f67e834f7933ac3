use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("product index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("pair indices must differ (got {0} twice)")]
    SameIndex(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("outside the demand domain: {0}")]
    OutOfDomain(String),
    #[error("numerical inversion did not converge (residual {residual:e})")]
    InversionFailed { residual: f64 },
    #[error("no positive root of the first-order condition on the search interval")]
    NoRoot,
    #[error("exact Shapley enumeration supports at most 12 players, got {players}")]
    TooManyPlayers { players: usize },
    #[error("evaluation failed at node {node:?}: {reason}")]
    NodeFailure { node: Vec<f64>, reason: String },
    #[error("optimizer failure: {0}")]
    Optimizer(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
