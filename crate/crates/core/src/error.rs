use thiserror::Error;

/// Errors raised by chain construction, solvers, generators and suites.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("chain is not connected: {components} components")]
    Disconnected { components: usize },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("size guard: {what} requires n <= {limit}, got n = {n}")]
    SizeGuard {
        what: &'static str,
        limit: usize,
        n: usize,
    },

    #[error("generation failed for seed {seed}: {reason}")]
    Generation { seed: u64, reason: String },

    #[error("walk exceeded step cap {cap} (seed {seed})")]
    StepCap { cap: u64, seed: u64 },

    #[error("config error in field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
