use thiserror::Error;

/// Errors produced while building or analyzing a scenario.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value; the message names the offending field.
    #[error("configuration error: {0}")]
    Config(String),

    /// Numeric domain violation (e.g. non-positive distance).
    #[error("domain error: {0}")]
    Domain(String),

    /// The global state space exceeds the configured cap.
    #[error("global state space has {size} states, exceeding the cap of {cap}")]
    StateCap { size: u128, cap: u128 },

    /// The rate matrix could not be solved to the required residual.
    #[error("stationary solve failed: {reason}; states unable to reach the empty state: {unreachable:?}")]
    Reducible {
        reason: String,
        unreachable: Vec<usize>,
    },

    /// Random deployment placement failed under the distance constraints.
    #[error("deployment infeasible: {0}")]
    Infeasible(String),

    /// Internal invariant violation; indicates a bug, not bad input.
    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("scenario file parse error: {0}")]
    Parse(String),
}
