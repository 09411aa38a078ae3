use thiserror::Error;

/// Errors shared by every module in this crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An input is outside the mathematical domain of the operation
    /// (for example a tied preference passed to a strict-order metric).
    #[error("domain error: {0}")]
    Domain(String),

    /// A request exceeds the enumeration or sweep caps this crate is
    /// willing to compute exhaustively.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Malformed textual input; `pos` is a byte offset into the input.
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    /// A protocol failed to decide within its declared round bound.
    #[error("liveness error: {0}")]
    Liveness(String),

    /// A protocol produced different behaviour on identical inputs.
    #[error("determinism error: {0}")]
    Determinism(String),

    /// A report failed independent recomputation.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// A verification step could not establish a property it requires.
    #[error("verification error: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }
}
