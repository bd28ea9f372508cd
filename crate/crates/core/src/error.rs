use thiserror::Error;

/// Precondition violations raised by the in-memory API.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("vertex {v} out of range for a graph with {n} vertices")]
    VertexOutOfRange { v: usize, n: usize },
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("not a permutation of 0..{0}")]
    NotPermutation(usize),
    #[error("vertex {0} is not a member of the set")]
    NotInSet(usize),
    #[error("{0}")]
    InvalidArgument(String),
}
