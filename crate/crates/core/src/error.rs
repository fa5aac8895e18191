use thiserror::Error;

use crate::graph::NodeId;

/// Errors produced by the index and its building blocks.
#[derive(Debug, Error)]
pub enum IndexError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("slot arena exhausted (capacity {capacity}, no empty or replaceable slot)")]
    CapacityExhausted { capacity: usize },

    #[error("adjacency invariant violated at node {node}: {reason}")]
    InvariantViolation { node: NodeId, reason: String },

    #[error("invalid operation on node {node}: {reason}")]
    InvalidOperation { node: NodeId, reason: String },

    #[error("contract violation on node {node}: {reason}")]
    ContractViolation { node: NodeId, reason: String },

    #[error("snapshot format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, IndexError>;
