use thiserror::Error;

/// Broad failure class, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or inconsistent input.
    Invalid,
    /// The input is well formed but exceeds an enumeration bound.
    UnsupportedSize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vertex {endpoint} is outside [1, {n}]")]
    EndpointOutOfRange { endpoint: usize, n: usize },

    #[error("self-loop at vertex {0} is not allowed in a simple graph")]
    SelfLoop(usize),

    #[error("graph must have at least one vertex")]
    EmptyVertexSet,

    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("not a permutation of [1, {n}]: {reason}")]
    InvalidPermutation { n: usize, reason: String },

    #[error("invalid graphon: {0}")]
    InvalidGraphon(String),

    #[error("invalid transition matrix: {0}")]
    InvalidTransition(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid edge kernel: {0}")]
    InvalidKernel(String),

    #[error("state {state} is not in the kernel's domain ({domain})")]
    StateOutOfDomain { state: String, domain: &'static str },

    #[error("chain is reducible: states {unreachable:?} are not mutually reachable with state 0")]
    Reducible { unreachable: Vec<usize> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported size: {0}")]
    UnsupportedSize(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::UnsupportedSize(_) => ErrorKind::UnsupportedSize,
            _ => ErrorKind::Invalid,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
