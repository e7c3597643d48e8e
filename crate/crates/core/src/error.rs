use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input at box {index}: {reason}")]
    InvalidBox { index: usize, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("layout has no boxes")]
    EmptyLayout,

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("non-finite value in {what} at node {node}")]
    NumericalFailure { node: usize, what: &'static str },

    #[error("shape mismatch for {name}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        name: String,
        expected: alloc::vec::Vec<usize>,
        found: alloc::vec::Vec<usize>,
    },
}
