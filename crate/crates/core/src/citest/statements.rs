use std::collections::HashSet;

use super::test::{partial_correlation_test, weight, Prepared};
use super::CiError;
use crate::exec::{map_slice, Execution};
use crate::graph::{intervene, sigma_separated, Backend, NodeId, NodeSet, SeparationQuery, SigmaCG};
use crate::sim::Dataset;

/// `(w, y, Z, I, λ)`: positive `λ` supports `w ⊥ y | Z` in regime `I`,
/// negative `λ` supports dependence. `±∞` marks a hard constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceStatement {
    pub w: NodeId,
    pub y: NodeId,
    pub z: NodeSet,
    pub targets: NodeSet,
    pub lambda: f64,
    pub p_value: Option<f64>,
}

/// Statements together with the variable names their ids refer to.
#[derive(Clone, Debug, PartialEq)]
pub struct StatementSet {
    pub nodes: Vec<String>,
    pub statements: Vec<IndependenceStatement>,
}

impl StatementSet {
    /// Distinct regimes in order of first appearance.
    pub fn regimes(&self) -> Vec<NodeSet> {
        let mut out: Vec<NodeSet> = Vec::new();
        for s in &self.statements {
            if !out.contains(&s.targets) {
                out.push(s.targets);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatementOptions {
    pub alpha: f64,
    /// Largest conditioning set; `None` tests all subsets.
    pub max_cond_size: Option<usize>,
    /// Drop statements whose variables include a target of their regime.
    pub exclude_targets: bool,
}

impl Default for StatementOptions {
    fn default() -> Self {
        StatementOptions { alpha: 1e-3, max_cond_size: None, exclude_targets: false }
    }
}

/// Every `(w, y, Z)` with `w < y` and `Z ⊆ V ∖ {w, y}`, pairs first, then `Z`
/// in lexicographic order of its sorted members.
fn triples(d: usize, max_cond: Option<usize>) -> Vec<(NodeId, NodeId, NodeSet)> {
    let all = NodeSet::full(d);
    let mut out = Vec::new();
    for w in 0..d {
        for y in w + 1..d {
            let mut zs: Vec<NodeSet> = (all.without(NodeId(w)).without(NodeId(y)))
                .subsets()
                .filter(|z| max_cond.is_none_or(|m| z.len() <= m))
                .collect();
            zs.sort_by_key(|z| z.iter().map(|v| v.0).collect::<Vec<_>>());
            out.extend(zs.into_iter().map(|z| (NodeId(w), NodeId(y), z)));
        }
    }
    out
}

fn check_alpha(alpha: f64) -> Result<(), CiError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CiError::BadAlpha(alpha))
    }
}

/// One statement per regime, pair and conditioning set, weighted by
/// `ln p − ln α` from a partial-correlation test on rank-transformed data.
pub fn generate_statements(
    datasets: &[Dataset],
    opts: &StatementOptions,
    exec: Execution,
) -> Result<StatementSet, CiError> {
    check_alpha(opts.alpha)?;
    let first = datasets.first().ok_or(CiError::NoData)?;
    let nodes = first.columns.clone();
    let mut seen = HashSet::new();
    let mut regimes = Vec::with_capacity(datasets.len());
    for ds in datasets {
        if ds.columns != nodes {
            return Err(CiError::ColumnMismatch(format!("{:?} vs {:?}", ds.columns, nodes)));
        }
        let mut t = NodeSet::EMPTY;
        for name in &ds.targets {
            let i = nodes.iter().position(|n| n == name).ok_or_else(|| CiError::UnknownVariable(name.clone()))?;
            t.insert(NodeId(i));
        }
        if !seen.insert(t) {
            return Err(CiError::DuplicateRegime(ds.targets.clone()));
        }
        regimes.push(t);
    }
    let prepared: Vec<Prepared> = datasets.iter().zip(&regimes).map(|(ds, &t)| Prepared::new(ds, t)).collect();
    let tri = triples(nodes.len(), opts.max_cond_size);
    let mut jobs = Vec::new();
    for (r, p) in prepared.iter().enumerate() {
        for &(w, y, z) in &tri {
            if opts.exclude_targets && (z.with(w).with(y)).intersects(p.targets) {
                continue;
            }
            jobs.push((r, w, y, z));
        }
    }
    let results = map_slice(exec, &jobs, |&(r, w, y, z)| {
        partial_correlation_test(&prepared[r], w, y, z).map(|res| IndependenceStatement {
            w,
            y,
            z,
            targets: prepared[r].targets,
            lambda: weight(res.p_value, opts.alpha),
            p_value: Some(res.p_value),
        })
    });
    let statements = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(StatementSet { nodes, statements })
}

/// Hard statements read off `g`: `+∞` where σ-separated in the intervened
/// graph, `−∞` otherwise.
pub fn oracle_statements(
    g: &SigmaCG,
    nodes: &[String],
    regimes: &[NodeSet],
    opts: &StatementOptions,
    backend: Backend,
) -> Result<StatementSet, CiError> {
    let d = nodes.len();
    let tri = triples(d, opts.max_cond_size);
    let mut statements = Vec::new();
    for &t in regimes {
        let gi = intervene(g, t)?;
        for &(w, y, z) in &tri {
            if opts.exclude_targets && (z.with(w).with(y)).intersects(t) {
                continue;
            }
            let sep = sigma_separated(&gi, &SeparationQuery::pair(w, y, z), backend)?;
            statements.push(IndependenceStatement {
                w,
                y,
                z,
                targets: t,
                lambda: if sep { f64::INFINITY } else { f64::NEG_INFINITY },
                p_value: None,
            });
        }
    }
    Ok(StatementSet { nodes: nodes.to_vec(), statements })
}

fn join(nodes: &[String], s: NodeSet) -> String {
    s.iter().map(|v| nodes[v.0].as_str()).collect::<Vec<_>>().join(";")
}

fn format_weight(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

/// CSV with columns `w,y,Z,I,lambda,p_value`; sets are `;`-joined names.
pub fn write_statements<W: std::io::Write>(set: &StatementSet, w: W) -> Result<(), CiError> {
    let mut out = csv::Writer::from_writer(w);
    let e = |e: csv::Error| CiError::Format(e.to_string());
    out.write_record(["w", "y", "Z", "I", "lambda", "p_value"]).map_err(e)?;
    for s in &set.statements {
        out.write_record([
            set.nodes[s.w.0].clone(),
            set.nodes[s.y.0].clone(),
            join(&set.nodes, s.z),
            join(&set.nodes, s.targets),
            format_weight(s.lambda),
            s.p_value.map(|p| format!("{p:?}")).unwrap_or_default(),
        ])
        .map_err(e)?;
    }
    out.flush()?;
    Ok(())
}

/// Parse a statement CSV. With `nodes` given, names must come from it;
/// otherwise variables are numbered in order of first appearance.
pub fn read_statements<R: std::io::Read>(r: R, nodes: Option<Vec<String>>) -> Result<StatementSet, CiError> {
    let fixed = nodes.is_some();
    let mut nodes = nodes.unwrap_or_default();
    let mut input = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> =
        input.headers().map_err(|e| CiError::Format(e.to_string()))?.iter().map(str::to_string).collect();
    if header != ["w", "y", "Z", "I", "lambda", "p_value"] {
        return Err(CiError::Format(format!("unexpected header {header:?}")));
    }
    let id = |name: &str, nodes: &mut Vec<String>| -> Result<NodeId, CiError> {
        if let Some(i) = nodes.iter().position(|n| n == name) {
            return Ok(NodeId(i));
        }
        if fixed {
            return Err(CiError::UnknownVariable(name.to_string()));
        }
        nodes.push(name.to_string());
        Ok(NodeId(nodes.len() - 1))
    };
    let mut statements = Vec::new();
    for (line, rec) in input.records().enumerate() {
        let rec = rec.map_err(|e| CiError::Format(e.to_string()))?;
        let bad = |what: &str| CiError::Format(format!("row {}: {what}", line + 2));
        let w = id(&rec[0], &mut nodes)?;
        let y = id(&rec[1], &mut nodes)?;
        let set = |field: &str, nodes: &mut Vec<String>| -> Result<NodeSet, CiError> {
            let mut s = NodeSet::EMPTY;
            for part in field.split(';').map(str::trim).filter(|p| !p.is_empty()) {
                s.insert(id(part, nodes)?);
            }
            Ok(s)
        };
        let z = set(&rec[2], &mut nodes)?;
        let targets = set(&rec[3], &mut nodes)?;
        let lambda: f64 = rec[4].parse().map_err(|_| bad("lambda is not a number"))?;
        if lambda.is_nan() {
            return Err(bad("lambda is NaN"));
        }
        let p_value = if rec[5].is_empty() {
            None
        } else {
            Some(rec[5].parse::<f64>().map_err(|_| bad("p_value is not a number"))?)
        };
        if w == y || z.contains(w) || z.contains(y) {
            return Err(bad("w and y must be distinct and outside Z"));
        }
        statements.push(IndependenceStatement { w, y, z, targets, lambda, p_value });
    }
    if nodes.len() > crate::graph::MAX_NODES {
        return Err(CiError::Format("too many variables".into()));
    }
    Ok(StatementSet { nodes, statements })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triple_count_and_order() {
        let t = triples(5, None);
        assert_eq!(t.len(), 80);
        assert_eq!(t[0], (NodeId(0), NodeId(1), NodeSet::EMPTY));
        assert_eq!(t[1].2, NodeSet::singleton(NodeId(2)));
        assert_eq!(t[2].2, [NodeId(2), NodeId(3)].into_iter().collect());
        assert_eq!(triples(5, Some(1)).len(), 40);
    }

    #[test]
    fn csv_round_trip_with_infinities() {
        let set = StatementSet {
            nodes: vec!["a".into(), "b".into(), "c".into()],
            statements: vec![
                IndependenceStatement {
                    w: NodeId(0),
                    y: NodeId(1),
                    z: NodeSet::singleton(NodeId(2)),
                    targets: NodeSet::EMPTY,
                    lambda: f64::INFINITY,
                    p_value: None,
                },
                IndependenceStatement {
                    w: NodeId(0),
                    y: NodeId(2),
                    z: NodeSet::EMPTY,
                    targets: NodeSet::singleton(NodeId(1)),
                    lambda: -2.5,
                    p_value: Some(1.2e-4),
                },
            ],
        };
        let mut buf = Vec::new();
        write_statements(&set, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("a,b,c,,inf,\n"));
        let back = read_statements(text.as_bytes(), Some(set.nodes.clone())).unwrap();
        assert_eq!(back, set);
        assert!(read_statements("w,y,Z,I,lambda,p_value\na,a,,,1,\n".as_bytes(), None).is_err());
        assert!(read_statements("w,y,Z,I,lambda,p_value\na,q,,,1,\n".as_bytes(), Some(vec!["a".into()])).is_err());
    }
}
