//! Causal discovery with σ-connection graphs.

pub mod exec;
pub mod citest;
pub mod discovery;
pub mod eval;
pub mod graph;
pub mod sim;

pub use exec::Execution;
