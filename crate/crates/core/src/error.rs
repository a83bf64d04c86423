use alloc::string::String;

use crate::tree::NodeId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("fewer than 2 classes")]
    TooFewClasses,
    #[error("constant dataset: every feature takes a single value")]
    ConstantDataset,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("node {0} is not a terminal")]
    NotTerminal(NodeId),
    #[error("node {0} cannot be pruned: it must be a split with two terminal children")]
    NotPrunable(NodeId),
    #[error("node {0} does not exist")]
    NoSuchNode(NodeId),
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty chain: no retained samples")]
    EmptyChain,
    #[error("invalid probability matrix: {0}")]
    InvalidProbabilities(String),
}
