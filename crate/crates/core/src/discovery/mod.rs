//! Loss minimisation over hypothesis graphs and feature confidences.

mod bnb;
mod exhaustive;
mod hypothesis;
mod problem;
mod report;

pub use exhaustive::{Landscape, MAX_EXHAUSTIVE_SLOTS};
pub use hypothesis::{intervened_graph, Feature, FeatureKind, HypothesisGraph, SlotLayout, MAX_HYPOTHESIS_NODES};
pub use problem::Problem;
pub use report::{extended, FeatureConfidence, FeatureEntry, GraphEntry, Report};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::citest::StatementSet;
use crate::exec::Execution;
use crate::graph::{sigma_separated, Backend, SeparationQuery};

#[derive(Debug, Error, PartialEq)]
pub enum DiscoveryError {
    #[error("{d} variables exceed the limit of {limit}")]
    TooManyVariables { d: usize, limit: usize },
    #[error("{slots} edge slots are too many for exhaustive search")]
    TooLargeForEnumeration { slots: usize },
    #[error("invalid statement: {0}")]
    BadStatement(String),
    #[error("hard constraints cannot all be satisfied")]
    Infeasible,
}

/// Which separation notion and which hypothesis space the loss uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    /// σ-separation, cycles allowed.
    #[default]
    Sigma,
    /// d-separation, cycles allowed.
    DCyclic,
    /// d-separation over acyclic graphs only.
    DAcyclic,
}

impl std::str::FromStr for Encoding {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sigma" => Ok(Encoding::Sigma),
            "d-cyclic" => Ok(Encoding::DCyclic),
            "d-acyclic" => Ok(Encoding::DAcyclic),
            _ => Err(format!("unknown encoding '{s}' (expected sigma, d-cyclic or d-acyclic)")),
        }
    }
}

impl std::fmt::Display for Encoding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Encoding::Sigma => "sigma",
            Encoding::DCyclic => "d-cyclic",
            Encoding::DAcyclic => "d-acyclic",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Enumeration up to `exhaustive_max_nodes`, branch and bound above.
    #[default]
    Auto,
    Exhaustive,
    BranchAndBound,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub encoding: Encoding,
    /// Restrict to acyclic hypotheses (implied by [`Encoding::DAcyclic`]).
    pub acyclic: bool,
    pub max_nodes: usize,
    pub exhaustive_max_nodes: usize,
    pub strategy: Strategy,
    pub argmin_cap: usize,
    pub backend: Backend,
    pub memoize: bool,
    pub exec: Execution,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            encoding: Encoding::Sigma,
            acyclic: false,
            max_nodes: 5,
            exhaustive_max_nodes: 4,
            strategy: Strategy::Auto,
            argmin_cap: 1_000_000,
            backend: Backend::Reduction,
            memoize: true,
            exec: Execution::Parallel,
        }
    }
}

impl SolveOptions {
    fn exhaustive(&self, d: usize) -> bool {
        match self.strategy {
            Strategy::Auto => d <= self.exhaustive_max_nodes,
            Strategy::Exhaustive => true,
            Strategy::BranchAndBound => false,
        }
    }
}

/// Optimal loss and its minimisers. An infinite `best_loss` means the hard
/// constraints are unsatisfiable; then there are no minimisers.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub best_loss: f64,
    pub argmin_count: u64,
    /// Minimiser codes in ascending order, at most `argmin_cap` of them.
    pub argmin: Vec<u64>,
}

/// Loss of one hypothesis under `statements`, evaluated statement by statement
/// on the intervened graphs. Works for any node count.
pub fn loss(g: &HypothesisGraph, statements: &StatementSet, opts: &SolveOptions) -> Result<f64, DiscoveryError> {
    if g.d() != statements.nodes.len() {
        return Err(DiscoveryError::BadStatement("graph and statements have different node counts".into()));
    }
    if (opts.acyclic || opts.encoding == Encoding::DAcyclic) && !g.sigma_cg().is_acyclic() {
        return Ok(f64::INFINITY);
    }
    let mut total = 0.0;
    for s in &statements.statements {
        if s.lambda.is_nan() {
            return Err(DiscoveryError::BadStatement("NaN weight".into()));
        }
        let gi = intervened_graph(g, s.targets).map_err(|e| DiscoveryError::BadStatement(e.to_string()))?;
        let q = SeparationQuery::pair(s.w, s.y, s.z);
        let sep = match opts.encoding {
            Encoding::Sigma => sigma_separated(&gi, &q, opts.backend),
            Encoding::DCyclic | Encoding::DAcyclic => sigma_separated(&gi.finest_sigma(), &q, opts.backend),
        }
        .map_err(|e| DiscoveryError::BadStatement(e.to_string()))?;
        if s.lambda > 0.0 && !sep {
            total += s.lambda;
        } else if s.lambda < 0.0 && sep {
            total += -s.lambda;
        }
    }
    Ok(total)
}

/// Global minimum of the loss.
pub fn solve(statements: &StatementSet, opts: &SolveOptions) -> Result<SolveResult, DiscoveryError> {
    let p = Problem::new(statements, opts)?;
    solve_problem(&p, opts)
}

pub(crate) fn solve_problem(p: &Problem, opts: &SolveOptions) -> Result<SolveResult, DiscoveryError> {
    if opts.exhaustive(p.layout.d()) {
        Ok(Landscape::build(p, opts.exec)?.solve(opts.argmin_cap))
    } else {
        Ok(bnb::Search::new(p, 0, 0, true, opts.argmin_cap).run(opts.exec))
    }
}

/// `min over graphs without f − min over graphs with f`, with `∞ − ∞ = 0`.
pub fn confidence(min_without: f64, min_with: f64) -> f64 {
    if min_without.is_infinite() && min_with.is_infinite() {
        0.0
    } else {
        min_without - min_with
    }
}

/// Solution and a confidence for every directed and bidirected edge.
pub fn score_all_features(
    statements: &StatementSet,
    opts: &SolveOptions,
) -> Result<(SolveResult, Vec<FeatureConfidence>), DiscoveryError> {
    let p = Problem::new(statements, opts)?;
    let layout = p.layout.clone();
    if opts.exhaustive(layout.d()) {
        let land = Landscape::build(&p, opts.exec)?;
        let minima = land.slot_minima(layout.len(), opts.exec);
        let features = layout
            .features()
            .iter()
            .zip(minima)
            .map(|(&feature, [without, with])| FeatureConfidence { feature, score: confidence(without, with) })
            .collect();
        return Ok((land.solve(opts.argmin_cap), features));
    }
    let global = bnb::Search::new(&p, 0, 0, true, opts.argmin_cap).run(opts.exec);
    let witness = global.argmin.first().copied();
    let mut features = Vec::with_capacity(layout.len());
    for (s, &feature) in layout.features().iter().enumerate() {
        let bit = 1u64 << s;
        // One side of every feature is attained by the global optimum.
        let (without, with) = match witness {
            Some(g) if g & bit != 0 => (bnb::Search::new(&p, bit, 0, false, 0).run(opts.exec).best_loss, global.best_loss),
            Some(_) => (global.best_loss, bnb::Search::new(&p, bit, bit, false, 0).run(opts.exec).best_loss),
            None => (f64::INFINITY, f64::INFINITY),
        };
        features.push(FeatureConfidence { feature, score: confidence(without, with) });
    }
    Ok((global, features))
}

/// Confidence of a single feature.
pub fn feature_confidence(
    statements: &StatementSet,
    feature: &Feature,
    opts: &SolveOptions,
) -> Result<FeatureConfidence, DiscoveryError> {
    let p = Problem::new(statements, opts)?;
    let s = p
        .layout
        .slot_of(feature)
        .ok_or_else(|| DiscoveryError::BadStatement(format!("no such feature {feature:?}")))?;
    let bit = 1u64 << s;
    let (without, with) = if opts.exhaustive(p.layout.d()) {
        let m = Landscape::build(&p, opts.exec)?.slot_minima(p.layout.len(), opts.exec);
        (m[s][0], m[s][1])
    } else {
        (
            bnb::Search::new(&p, bit, 0, false, 0).run(opts.exec).best_loss,
            bnb::Search::new(&p, bit, bit, false, 0).run(opts.exec).best_loss,
        )
    };
    Ok(FeatureConfidence { feature: *feature, score: confidence(without, with) })
}
