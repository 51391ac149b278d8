//! Synthetic benchmark protocol: random models, interventions, statements,
//! feature scores against ground truth, and ROC/PR summaries.

mod roc;

pub use roc::{roc_pr, CurveError, CurvePoint, Curves};

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};

use crate::citest::{generate_statements, StatementOptions, StatementSet};
use crate::discovery::{extended, score_all_features, Encoding, FeatureKind, SolveOptions};
use crate::exec::{map_range, Execution};
use crate::graph::{Backend, NodeId, NodeSet};
use crate::sim::{random_mscm, sample, Dataset};

/// A single value or a list of them.
fn one_or_many<'de, D: Deserializer<'de>, T: Deserialize<'de>>(d: D) -> Result<Vec<T>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match Repr::deserialize(d)? {
        Repr::One(x) => vec![x],
        Repr::Many(v) => v,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub k: usize,
    pub p: f64,
    /// Samples per regime.
    pub n: usize,
    /// Numbers of single-target interventional regimes to compare.
    #[serde(deserialize_with = "one_or_many")]
    pub interventions: Vec<usize>,
    pub replicates: usize,
    pub alpha: f64,
    #[serde(deserialize_with = "one_or_many")]
    pub encoding: Vec<Encoding>,
    pub seed: u64,
    pub backend: Backend,
    pub max_cond_size: Option<usize>,
    pub exclude_targets: bool,
    pub max_nodes: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            d: 4,
            k: 2,
            p: 0.3,
            n: 10_000,
            interventions: vec![0, 4],
            replicates: 50,
            alpha: 1e-3,
            encoding: vec![Encoding::Sigma],
            seed: 1,
            backend: Backend::Walk,
            max_cond_size: None,
            exclude_targets: false,
            max_nodes: 5,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::Config(m));
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.d == 0 || self.d > self.max_nodes {
            return bad(format!("d = {} outside 1..={}", self.d, self.max_nodes));
        }
        if let Some(&m) = self.interventions.iter().find(|&&m| m > self.d) {
            return bad(format!("{m} interventions exceed d = {}", self.d));
        }
        if self.interventions.is_empty() || self.encoding.is_empty() {
            return bad("need at least one intervention count and one encoding".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha = {} outside (0, 1)", self.alpha));
        }
        if self.n < self.d + 4 {
            return bad(format!("n = {} too small for d = {}", self.n, self.d));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p = {} outside [0, 1]", self.p));
        }
        if self.k > self.d * (self.d - 1) / 2 {
            return bad(format!("k = {} confounders need distinct child pairs", self.k));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRecord {
    pub model_id: usize,
    pub encoding: Encoding,
    pub interventions: usize,
    pub kind: FeatureKind,
    pub from: String,
    pub to: String,
    pub score: f64,
    pub label: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateInfo {
    pub model_id: usize,
    /// Intervention targets in the order they are added.
    pub target_order: Vec<String>,
    pub cyclic: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub records: Vec<ScoreRecord>,
    pub replicates: Vec<ReplicateInfo>,
    pub skipped: Vec<(usize, String)>,
}

/// Per-replicate outcome before pooling.
type Replicate = Result<(ReplicateInfo, Vec<ScoreRecord>), String>;

/// Seeds and intervention order of one replicate.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicatePlan {
    pub model_seed: u64,
    /// All observed nodes in the order they become intervention targets.
    pub order: Vec<usize>,
    /// Seed for the observational regime, then one per intervention.
    pub data_seeds: Vec<u64>,
}

/// Derive the plan of replicate `r` from the experiment seed.
pub fn replicate_plan(seed: u64, r: usize, d: usize, max_interventions: usize) -> ReplicatePlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    let model_seed = rng.next_u64();
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(&mut rng);
    let data_seeds = (0..=max_interventions).map(|_| rng.next_u64()).collect();
    ReplicatePlan { model_seed, order, data_seeds }
}

fn run_replicate(cfg: &ExperimentConfig, r: usize, exec: Execution) -> Replicate {
    let d = cfg.d;
    let max_m = cfg.interventions.iter().copied().max().unwrap_or(0);
    let ReplicatePlan { model_seed, order, data_seeds } = replicate_plan(cfg.seed, r, d, max_m);

    let model = random_mscm(d, cfg.k, cfg.p, model_seed).map_err(|e| e.to_string())?;
    let truth = model.induced_sigma_cg();
    let mut datasets: Vec<Dataset> = Vec::with_capacity(max_m + 1);
    datasets.push(sample(&model, cfg.n, data_seeds[0], exec).map_err(|e| e.to_string())?);
    for j in 0..max_m {
        let m = model.intervene(NodeSet::singleton(NodeId(order[j]))).map_err(|e| e.to_string())?;
        datasets.push(sample(&m, cfg.n, data_seeds[j + 1], exec).map_err(|e| e.to_string())?);
    }
    let sopts =
        StatementOptions { alpha: cfg.alpha, max_cond_size: cfg.max_cond_size, exclude_targets: cfg.exclude_targets };
    let all = generate_statements(&datasets, &sopts, exec).map_err(|e| e.to_string())?;

    let mut records = Vec::new();
    for &m in &cfg.interventions {
        let allowed: Vec<NodeSet> =
            std::iter::once(NodeSet::EMPTY).chain(order[..m].iter().map(|&t| NodeSet::singleton(NodeId(t)))).collect();
        let subset = StatementSet {
            nodes: all.nodes.clone(),
            statements: all.statements.iter().filter(|s| allowed.contains(&s.targets)).cloned().collect(),
        };
        for &encoding in &cfg.encoding {
            let opts = SolveOptions {
                encoding,
                backend: cfg.backend,
                max_nodes: cfg.max_nodes,
                argmin_cap: 0,
                exec,
                ..SolveOptions::default()
            };
            let (_, features) = score_all_features(&subset, &opts).map_err(|e| e.to_string())?;
            for fc in features {
                let f = fc.feature;
                let label = match f.kind {
                    FeatureKind::Directed => truth.has_directed(f.from, f.to),
                    FeatureKind::Bidirected => truth.has_bidirected(f.from, f.to),
                };
                records.push(ScoreRecord {
                    model_id: r,
                    encoding,
                    interventions: m,
                    kind: f.kind,
                    from: model.observed()[f.from.0].clone(),
                    to: model.observed()[f.to.0].clone(),
                    score: fc.score,
                    label,
                });
            }
        }
    }
    let info = ReplicateInfo {
        model_id: r,
        target_order: order[..max_m].iter().map(|&t| model.observed()[t].clone()).collect(),
        cyclic: !truth.is_acyclic(),
    };
    Ok((info, records))
}

/// Run every replicate; failing replicates are logged and skipped.
pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentResult, EvalError> {
    cfg.validate()?;
    if cfg.d >= 5 {
        log::warn!("d = {} searches 2^{} graphs per scoring call", cfg.d, cfg.d * (cfg.d - 1) + cfg.d * (cfg.d - 1) / 2);
    }
    let outcomes = map_range(exec, cfg.replicates, |r| run_replicate(cfg, r, exec));
    let mut result = ExperimentResult { config: cfg.clone(), records: Vec::new(), replicates: Vec::new(), skipped: Vec::new() };
    for (r, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok((info, recs)) => {
                result.replicates.push(info);
                result.records.extend(recs);
            }
            Err(e) => {
                log::warn!("replicate {r} skipped: {e}");
                result.skipped.push((r, e));
            }
        }
    }
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub encoding: Encoding,
    pub interventions: usize,
    pub kind: FeatureKind,
    pub positives: usize,
    pub negatives: usize,
    /// Over all replicates pooled; `None` when labels are all one class.
    pub pooled_auc: Option<f64>,
    pub pooled_ap: Option<f64>,
    /// Mean over replicates whose labels contain both classes.
    pub mean_auc: Option<f64>,
    pub mean_ap: Option<f64>,
    pub replicates_scored: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub replicates_run: usize,
    pub cyclic_models: usize,
    pub skipped: Vec<usize>,
    pub target_orders: Vec<Vec<String>>,
    pub cells: Vec<CellSummary>,
}

impl ExperimentResult {
    fn cells(&self) -> Vec<(Encoding, usize, FeatureKind)> {
        let mut out = Vec::new();
        for &e in &self.config.encoding {
            for &m in &self.config.interventions {
                for kind in [FeatureKind::Directed, FeatureKind::Bidirected] {
                    out.push((e, m, kind));
                }
            }
        }
        out
    }

    fn cell_records(&self, e: Encoding, m: usize, kind: FeatureKind) -> impl Iterator<Item = &ScoreRecord> {
        self.records.iter().filter(move |r| r.encoding == e && r.interventions == m && r.kind == kind)
    }

    pub fn curves(&self, e: Encoding, m: usize, kind: FeatureKind) -> Result<Curves, CurveError> {
        let (s, l): (Vec<f64>, Vec<bool>) = self.cell_records(e, m, kind).map(|r| (r.score, r.label)).unzip();
        roc_pr(&s, &l)
    }

    pub fn summary(&self) -> Summary {
        let mut cells = Vec::new();
        for (e, m, kind) in self.cells() {
            let recs: Vec<&ScoreRecord> = self.cell_records(e, m, kind).collect();
            let positives = recs.iter().filter(|r| r.label).count();
            let pooled = self.curves(e, m, kind).ok();
            let mut aucs = Vec::new();
            let mut aps = Vec::new();
            for info in &self.replicates {
                let (s, l): (Vec<f64>, Vec<bool>) =
                    recs.iter().filter(|r| r.model_id == info.model_id).map(|r| (r.score, r.label)).unzip();
                if let Ok(c) = roc_pr(&s, &l) {
                    aucs.push(c.auc);
                    aps.push(c.average_precision);
                }
            }
            let mean = |v: &[f64]| if v.is_empty() { None } else { Some(v.iter().sum::<f64>() / v.len() as f64) };
            cells.push(CellSummary {
                encoding: e,
                interventions: m,
                kind,
                positives,
                negatives: recs.len() - positives,
                pooled_auc: pooled.as_ref().map(|c| c.auc),
                pooled_ap: pooled.as_ref().map(|c| c.average_precision),
                mean_auc: mean(&aucs),
                mean_ap: mean(&aps),
                replicates_scored: aucs.len(),
            });
        }
        Summary {
            config: self.config.clone(),
            replicates_run: self.replicates.len(),
            cyclic_models: self.replicates.iter().filter(|r| r.cyclic).count(),
            skipped: self.skipped.iter().map(|s| s.0).collect(),
            target_orders: self.replicates.iter().map(|r| r.target_order.clone()).collect(),
            cells,
        }
    }

    pub fn cell(&self, e: Encoding, m: usize, kind: FeatureKind) -> Option<CellSummary> {
        self.summary().cells.into_iter().find(|c| c.encoding == e && c.interventions == m && c.kind == kind)
    }

    /// Write `scores.csv`, `curves.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), EvalError> {
        std::fs::create_dir_all(dir)?;
        let csv_err = |e: csv::Error| EvalError::Io(std::io::Error::other(e));
        let mut w = csv::Writer::from_path(dir.join("scores.csv")).map_err(csv_err)?;
        w.write_record(["model_id", "encoding", "interventions", "kind", "from", "to", "score", "label"])
            .map_err(csv_err)?;
        for r in &self.records {
            w.write_record([
                r.model_id.to_string(),
                r.encoding.to_string(),
                r.interventions.to_string(),
                r.kind.to_string(),
                r.from.clone(),
                r.to.clone(),
                extended::format(r.score),
                (r.label as u8).to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("curves.csv")).map_err(csv_err)?;
        w.write_record(["encoding", "interventions", "kind", "threshold", "tpr", "fpr", "precision", "recall"])
            .map_err(csv_err)?;
        for (e, m, kind) in self.cells() {
            if let Ok(c) = self.curves(e, m, kind) {
                for p in c.points {
                    w.write_record([
                        e.to_string(),
                        m.to_string(),
                        kind.to_string(),
                        extended::format(p.threshold),
                        format!("{:?}", p.tpr),
                        format!("{:?}", p.fpr),
                        format!("{:?}", p.precision),
                        format!("{:?}", p.recall),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
        w.flush()?;

        let summary = serde_json::to_string_pretty(&self.summary()).expect("summary serialises");
        std::fs::write(dir.join("summary.json"), summary + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_accepts_scalars_and_lists() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"interventions": 2, "encoding": "d-acyclic"}"#).unwrap();
        assert_eq!(c.interventions, vec![2]);
        assert_eq!(c.encoding, vec![Encoding::DAcyclic]);
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"interventions": [0, 1], "encoding": ["sigma", "d-cyclic"]}"#).unwrap();
        assert_eq!(c.encoding.len(), 2);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
        assert!(ExperimentConfig { interventions: vec![5], ..Default::default() }.validate().is_err());
    }

    #[test]
    fn tiny_experiment() {
        let cfg = ExperimentConfig { d: 2, k: 0, n: 500, replicates: 1, interventions: vec![0], ..Default::default() };
        let r = run_experiment(&cfg, Execution::Sequential).unwrap();
        assert_eq!(r.records.len(), 3);
        assert!(r.skipped.is_empty());
    }
}
