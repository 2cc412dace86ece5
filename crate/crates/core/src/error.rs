use thiserror::Error;

/// Errors raised across the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },

    #[error("system of {sites} sites exceeds the dense limit of {limit}")]
    Capacity { sites: usize, limit: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    /// A fidelity term left (0, 1 + ε]; the variational state has collapsed.
    #[error("collapsed variational state: fidelity term {term} = {value}")]
    Collapsed { term: usize, value: f64 },

    #[error("unsupported Taylor order {0} (supported: 1..=3)")]
    UnsupportedOrder(usize),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),

    #[error("checkpoint format: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
