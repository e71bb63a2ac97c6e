use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The working precision cannot certify a quantity at index `n`.
    #[error("{bits}-bit precision cannot certify {what} at n = {n}")]
    Precision { n: u64, bits: u32, what: &'static str },

    #[error("convergent {k} is not certified at {bits} bits (only {available} available)")]
    UncertifiedConvergent { k: usize, bits: u32, available: usize },

    #[error("block window for k = {k}, tau = {tau} contains no integer")]
    EmptyWindow { k: usize, tau: f64 },

    #[error("need at least two valid blocks to fit a constant, got {0}")]
    TooFewBlocks(usize),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// The index that failed certification, if any.
    pub fn failing_index(&self) -> Option<u64> {
        match self {
            Error::Precision { n, .. } => Some(*n),
            _ => None,
        }
    }
}
