use thiserror::Error;

/// Errors raised by chain construction, kernels and verification routines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("weights do not form a probability distribution: {0}")]
    NonDistribution(String),

    #[error("cannot sample from an empty distribution")]
    EmptyDistribution,

    #[error("outcome index sets differ: {left} vs {right} entries")]
    IndexMismatch { left: usize, right: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("need at least {needed} non-bump probabilities, got {got}")]
    InsufficientAlphas { needed: usize, got: usize },

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("state space has {states} states, above the cap of {cap}")]
    StateSpaceTooLarge { states: usize, cap: usize },

    #[error("linear system is singular; the chain is probably reducible")]
    SingularSystem,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
