//! Random contractive mSCMs with tanh mechanisms and their sampling.

mod dataset;
pub mod fixtures;
mod model;
mod solve;

pub use dataset::{sample, Dataset, DatasetManifest};
pub use model::{check_contraction, random_mscm, sample_l1_ball, Contraction, Mscm, MscmDocument};
pub use solve::{solve_fixed_point, Exogenous, FixedPoint, Init, Solver, MAX_ITERATIONS, TOLERANCE};

use thiserror::Error;

use crate::graph::GraphError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid model parameters: {0}")]
    InvalidParameters(String),
    #[error("node {node} violates the contraction condition (row sum {row_sum})")]
    NotContractive { node: String, row_sum: f64 },
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("fixed-point iteration did not converge (residual {residual:e} after {iterations} iterations)")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("malformed model or dataset: {0}")]
    Format(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
