use thiserror::Error;

/// Errors produced by the numerical and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid channel: {0}")]
    InvalidSpec(String),

    #[error("alphabet too large: |X| = {size} exceeds the limit of {limit} for simplex search")]
    AlphabetTooLarge { size: usize, limit: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("no convergence after {iterations} iterations (remaining gap {gap:e})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("budget exceeded: {what} needs {requested}, limit is {limit}")]
    Budget {
        what: &'static str,
        requested: u128,
        limit: u128,
    },
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numerical,
    Budget,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NonConvergence { .. } => ErrorKind::Numerical,
            Error::Budget { .. } => ErrorKind::Budget,
            _ => ErrorKind::Input,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
