//! σ-connection graphs and the separation calculus on them.

mod document;
pub mod fixtures;
mod nodeset;
mod ops;
pub mod random;
mod separation;
mod sigma_cg;

pub use document::{GraphDocument, NamedGraph};
pub use nodeset::{NodeId, NodeSet, NodeSetIter, MAX_NODES};
pub use ops::{condition, intervene, marginalise, reduce, reduce_in_order};
pub use separation::{
    d_separated, sigma_connecting_walk, sigma_reachable, sigma_separated, sigma_separated_reduction,
    sigma_separated_walk, Backend, SeparationQuery,
};
pub use sigma_cg::{CanonicalGraph, Edge, EdgeKind, Mark, SigmaCG, Violation};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("node {0} not found")]
    NodeNotFound(NodeId),
    #[error("unknown node name '{0}'")]
    UnknownName(String),
    #[error("duplicate node name '{0}'")]
    DuplicateNode(String),
    #[error("graph has {0} nodes, at most {MAX_NODES} are supported")]
    TooManyNodes(usize),
    #[error("node {0} appears in more than one sigma class")]
    OverlappingClasses(NodeId),
    #[error("node {0} is both marginalised and conditioned on")]
    MarginalConditionalOverlap(NodeId),
    #[error("invalid sigma-connection graph: {0}")]
    Invalid(Violation),
    #[error("malformed graph document: {0}")]
    Json(String),
}
