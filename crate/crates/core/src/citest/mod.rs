//! Conditional-independence testing and weighted statements.

mod statements;
mod test;

pub use statements::{
    generate_statements, oracle_statements, read_statements, write_statements, IndependenceStatement,
    StatementOptions, StatementSet,
};
pub use test::{gauss_rank_transform, partial_correlation_test, weight, CiResult, Prepared, P_MIN};

use thiserror::Error;

use crate::graph::GraphError;

#[derive(Debug, Error)]
pub enum CiError {
    #[error("no datasets given")]
    NoData,
    #[error("need at least {need} samples for a test with {cond} conditioning variables, have {have}")]
    InsufficientSamples { have: usize, need: usize, cond: usize },
    #[error("datasets disagree on columns: {0}")]
    ColumnMismatch(String),
    #[error("duplicate regime {0:?}")]
    DuplicateRegime(Vec<String>),
    #[error("alpha must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error("unknown variable '{0}'")]
    UnknownVariable(String),
    #[error("malformed statement file: {0}")]
    Format(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
