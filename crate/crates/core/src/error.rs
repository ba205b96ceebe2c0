use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rank N must be at least {min}, got {n}")]
    InvalidRank { n: usize, min: usize },

    #[error("triple (k={k}, l={l}, m={m}) is not admissible")]
    NotAdmissible { k: usize, l: usize, m: usize },

    #[error("quantum integer [{n}]_q overflows f64; use the log-space variant")]
    Overflow { n: usize },

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    CapExceeded { dim: usize, cap: usize },

    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("alternating vector needs distinct indices, got ({0}, {0})")]
    RepeatedIndex(usize),

    #[error("split {split} is invalid for a tensor with {legs} legs")]
    InvalidSplit { split: usize, legs: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("zero vector has no Schmidt decomposition")]
    ZeroVector,

    #[error("input is not a state: {0}")]
    NotAState(String),

    #[error("no witness family: {0}")]
    WitnessUnavailable(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
