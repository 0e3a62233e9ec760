use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("local dimension {0} is not supported (must be in 2..=127)")]
    UnsupportedDimension(u32),

    #[error("local dimension {0} is not prime")]
    NotPrime(u32),

    #[error("index {index} out of range (limit {limit})")]
    InvalidIndex { index: usize, limit: usize },

    #[error("state of {required} amplitudes exceeds the dense capacity of {capacity}")]
    Capacity { required: u128, capacity: u128 },

    #[error("control and target must differ (site {0})")]
    SameSite(usize),

    #[error("measurement basis is not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("operator is not of order d: {0}")]
    NotOrderD(String),

    #[error("operators do not commute: {0}")]
    NonCommuting(String),

    #[error("generators have an inconsistent phase: {0}")]
    InconsistentPhase(String),

    #[error("generator list is empty")]
    EmptyGenerators,

    #[error("requested measurement branch has zero probability (outcome {0})")]
    ZeroProbabilityBranch(usize),

    #[error("no forced outcome left for a random measurement")]
    OutcomeQueueExhausted,

    #[error("hole error: {0}")]
    Hole(String),

    #[error("path is not connected: {0}")]
    DisconnectedPath(String),

    #[error("invalid logical qudit: {0}")]
    InvalidQudit(String),

    #[error("inconsistent syndrome: {0}")]
    InconsistentSyndrome(String),

    #[error("at least {required} points needed, got {got}")]
    InsufficientPoints { required: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("protocol failure: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
