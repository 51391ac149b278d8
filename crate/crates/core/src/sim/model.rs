use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::graph::{NodeId, NodeSet, SigmaCG, MAX_NODES};

/// A modular structural causal model with mechanisms
/// `x_v = tanh(Σ_k A[v,k] x_k + b_v) + e_v`, where `e_v` adds the values of the
/// latent parents of `v` and, when enabled, a private standard-normal term.
///
/// Nodes of `targets` are intervened on: their mechanism is replaced by an
/// independent standard-normal draw.
#[derive(Clone, Debug, PartialEq)]
pub struct Mscm {
    observed: Vec<String>,
    latent: Vec<String>,
    parents: Vec<NodeSet>,
    latent_children: Vec<NodeSet>,
    /// Dense rows over observed nodes followed by latents.
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    private_noise: Vec<bool>,
    targets: NodeSet,
    seed: Option<u64>,
}

/// Result of [`check_contraction`].
#[derive(Clone, Debug, PartialEq)]
pub enum Contraction {
    Certified { max_row_sum: f64 },
    Violated { node: usize, row_sum: f64 },
}

impl Mscm {
    /// Build a model from its parts. `weights[v]` lists `(parent, weight)` pairs
    /// over observed nodes; latent child sets are given by observed node ids.
    pub fn new(
        observed: Vec<String>,
        latent: Vec<String>,
        weights: Vec<Vec<(usize, f64)>>,
        latent_children: Vec<NodeSet>,
        biases: Vec<f64>,
        private_noise: Vec<bool>,
    ) -> Result<Mscm, SimError> {
        let d = observed.len();
        let k = latent.len();
        if d == 0 || d > MAX_NODES {
            return Err(SimError::InvalidParameters(format!("need 1..={MAX_NODES} observed nodes, got {d}")));
        }
        if weights.len() != d || biases.len() != d || private_noise.len() != d || latent_children.len() != k {
            return Err(SimError::InvalidParameters("length mismatch between nodes and parameters".into()));
        }
        let all = NodeSet::full(d);
        let mut parents = vec![NodeSet::EMPTY; d];
        let mut dense = vec![vec![0.0; d + k]; d];
        for (v, row) in weights.iter().enumerate() {
            for &(p, w) in row {
                if p >= d || p == v {
                    return Err(SimError::InvalidParameters(format!("bad parent {p} of {}", observed[v])));
                }
                if w != 0.0 {
                    parents[v].insert(NodeId(p));
                    dense[v][p] = w;
                }
            }
        }
        for ch in &latent_children {
            if !ch.is_subset(all) {
                return Err(SimError::InvalidParameters("latent child out of range".into()));
            }
        }
        let m = Mscm {
            observed,
            latent,
            parents,
            latent_children,
            weights: dense,
            biases,
            private_noise,
            targets: NodeSet::EMPTY,
            seed: None,
        };
        if let Contraction::Violated { node, row_sum } = check_contraction(&m) {
            return Err(SimError::NotContractive { node: m.observed[node].clone(), row_sum });
        }
        Ok(m)
    }

    pub fn observed(&self) -> &[String] {
        &self.observed
    }

    pub fn latent(&self) -> &[String] {
        &self.latent
    }

    pub fn d(&self) -> usize {
        self.observed.len()
    }

    pub fn k(&self) -> usize {
        self.latent.len()
    }

    pub fn parents(&self, v: usize) -> NodeSet {
        self.parents[v]
    }

    pub fn latent_children(&self, u: usize) -> NodeSet {
        self.latent_children[u]
    }

    pub fn weight(&self, v: usize, k: usize) -> f64 {
        self.weights[v][k]
    }

    pub fn weight_rows(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn bias(&self, v: usize) -> f64 {
        self.biases[v]
    }

    pub fn has_private_noise(&self, v: usize) -> bool {
        self.private_noise[v]
    }

    pub fn targets(&self) -> NodeSet {
        self.targets
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn index_of(&self, name: &str) -> Result<usize, SimError> {
        self.observed
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| SimError::UnknownNode(name.to_string()))
    }

    pub fn names_of(&self, s: NodeSet) -> Vec<String> {
        s.iter().map(|v| self.observed[v.0].clone()).collect()
    }

    /// Latents feeding into `v`.
    pub fn latent_parents(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.k()).filter(move |&u| self.latent_children[u].contains(NodeId(v)))
    }

    /// Perfect stochastic intervention on `targets`: every edge into a target is
    /// removed (latent edges included) and its mechanism becomes a standard-normal
    /// draw.
    pub fn intervene(&self, targets: NodeSet) -> Result<Mscm, SimError> {
        if let Some(v) = (targets - NodeSet::full(self.d())).first() {
            return Err(SimError::UnknownNode(format!("#{}", v.0)));
        }
        let mut m = self.clone();
        for t in targets {
            m.parents[t.0] = NodeSet::EMPTY;
            m.weights[t.0].iter_mut().for_each(|w| *w = 0.0);
        }
        for ch in &mut m.latent_children {
            *ch = *ch - targets;
        }
        m.targets |= targets;
        Ok(m)
    }

    /// Intervention by node names.
    pub fn intervene_named<S: AsRef<str>>(&self, targets: &[S]) -> Result<Mscm, SimError> {
        let mut set = NodeSet::EMPTY;
        for t in targets {
            set.insert(NodeId(self.index_of(t.as_ref())?));
        }
        self.intervene(set)
    }

    /// The induced σ-CG: observed directed edges, a bidirected edge between any
    /// two observed nodes sharing a latent parent, and strongly connected
    /// components as classes.
    pub fn induced_sigma_cg(&self) -> SigmaCG {
        let mut g = SigmaCG::new(self.d()).expect("node count checked at construction");
        for v in 0..self.d() {
            for p in self.parents[v] {
                g.add_directed(p, NodeId(v)).unwrap();
            }
        }
        for ch in &self.latent_children {
            for a in *ch {
                for b in ch.iter().filter(|b| b.0 > a.0) {
                    g.add_bidirected(a, b).unwrap();
                }
            }
        }
        g.coarsest_sigma()
    }

    /// Check the structural invariants on latents: no parents (by construction),
    /// at least one child each, and pairwise non-nested child sets.
    pub fn check_latents(&self) -> Result<(), SimError> {
        for (i, a) in self.latent_children.iter().enumerate() {
            if a.is_empty() && self.targets.is_empty() {
                return Err(SimError::InvalidParameters(format!("latent {} has no children", self.latent[i])));
            }
            for (j, b) in self.latent_children.iter().enumerate() {
                if i != j && !a.is_empty() && a.is_subset(*b) {
                    return Err(SimError::InvalidParameters(format!(
                        "children of {} are contained in those of {}",
                        self.latent[i], self.latent[j]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_document(&self) -> MscmDocument {
        let d = self.d();
        let mut directed = Vec::new();
        for v in 0..d {
            for p in self.parents[v] {
                directed.push([self.observed[p.0].clone(), self.observed[v].clone()]);
            }
        }
        for (u, ch) in self.latent_children.iter().enumerate() {
            for v in *ch {
                directed.push([self.latent[u].clone(), self.observed[v.0].clone()]);
            }
        }
        MscmDocument {
            observed: self.observed.clone(),
            latent: self.latent.clone(),
            directed,
            weights: self.weights.clone(),
            biases: self.biases.clone(),
            private_noise: self.private_noise.clone(),
            targets: self.names_of(self.targets),
            seed: self.seed,
        }
    }

    pub fn from_document(doc: &MscmDocument) -> Result<Mscm, SimError> {
        let d = doc.observed.len();
        let k = doc.latent.len();
        let find = |names: &[String], n: &str| names.iter().position(|x| x == n);
        let mut edge_parents = vec![NodeSet::EMPTY; d];
        let mut latent_children = vec![NodeSet::EMPTY; k];
        for [a, b] in &doc.directed {
            let to = find(&doc.observed, b).ok_or_else(|| SimError::UnknownNode(b.clone()))?;
            if let Some(from) = find(&doc.observed, a) {
                edge_parents[to].insert(NodeId(from));
            } else if let Some(u) = find(&doc.latent, a) {
                latent_children[u].insert(NodeId(to));
            } else {
                return Err(SimError::UnknownNode(a.clone()));
            }
        }
        if doc.weights.len() != d || doc.weights.iter().any(|r| r.len() != d + k) {
            return Err(SimError::Format(format!("weights must be a {d} x {} matrix", d + k)));
        }
        let mut rows = Vec::with_capacity(d);
        for v in 0..d {
            let mut row = Vec::new();
            for (p, &w) in doc.weights[v].iter().enumerate() {
                let on_edge = p < d && edge_parents[v].contains(NodeId(p));
                if w != 0.0 && !on_edge {
                    return Err(SimError::Format(format!(
                        "nonzero weight of {} on column {p} without an observed edge",
                        doc.observed[v]
                    )));
                }
                if on_edge {
                    // Keep the edge even if its weight is exactly zero.
                    row.push((p, w));
                }
            }
            rows.push(row);
        }
        let private = if doc.private_noise.is_empty() { vec![true; d] } else { doc.private_noise.clone() };
        let mut m = Mscm::new(doc.observed.clone(), doc.latent.clone(), rows, latent_children, doc.biases.clone(), private)?;
        m.parents = edge_parents;
        let mut targets = NodeSet::EMPTY;
        for t in &doc.targets {
            targets.insert(NodeId(m.index_of(t)?));
        }
        if !targets.is_empty() {
            m = m.intervene(targets)?;
        }
        m.seed = doc.seed;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model serialises")
    }

    pub fn from_json(text: &str) -> Result<Mscm, SimError> {
        let doc: MscmDocument = serde_json::from_str(text).map_err(|e| SimError::Format(e.to_string()))?;
        Mscm::from_document(&doc)
    }
}

/// JSON form of an [`Mscm`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MscmDocument {
    pub observed: Vec<String>,
    #[serde(default)]
    pub latent: Vec<String>,
    /// Edges over observed and latent names; latents may only appear as sources.
    #[serde(default)]
    pub directed: Vec<[String; 2]>,
    /// `observed × (observed ++ latent)` weight matrix.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    #[serde(default)]
    pub private_noise: Vec<bool>,
    #[serde(default)]
    pub targets: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Uniform draw from the L1 unit ball: `y / (Σ|y_i| + z)` with Laplace `y_i`
/// and exponential `z`.
pub fn sample_l1_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<Vec<f64>, SimError> {
    if dim == 0 {
        return Err(SimError::InvalidParameters("L1 ball of dimension 0".into()));
    }
    let y: Vec<f64> = (0..dim)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            if rng.random_bool(0.5) {
                e
            } else {
                -e
            }
        })
        .collect();
    let z: f64 = Exp1.sample(rng);
    let norm = y.iter().map(|v| v.abs()).sum::<f64>() + z;
    Ok(y.into_iter().map(|v| v / norm).collect())
}

/// Row-sum contraction check over observed columns.
pub fn check_contraction(m: &Mscm) -> Contraction {
    let d = m.d();
    let mut max_row_sum: f64 = 0.0;
    for v in 0..d {
        let s: f64 = m.weights[v][..d].iter().map(|w| w.abs()).sum();
        if s >= 1.0 {
            return Contraction::Violated { node: v, row_sum: s };
        }
        max_row_sum = max_row_sum.max(s);
    }
    Contraction::Certified { max_row_sum }
}

/// Random model with `d` observed nodes `v1..vd` and `k` latent confounders
/// `u1..uk`. Observed edges appear independently with probability `p`; each
/// confounder gets a distinct pair of children; weight rows are uniform on the
/// L1 ball; biases are `N(-0.5, 0.2)`. Every observed node also has private noise.
pub fn random_mscm(d: usize, k: usize, p: f64, seed: u64) -> Result<Mscm, SimError> {
    if d == 0 || d > MAX_NODES {
        return Err(SimError::InvalidParameters(format!("d must be in 1..={MAX_NODES}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::InvalidParameters(format!("edge probability {p} outside [0, 1]")));
    }
    let pairs = d * (d - 1) / 2;
    if k > pairs {
        return Err(SimError::InvalidParameters(format!(
            "{k} confounders need distinct child pairs but only {pairs} exist for d = {d}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parents = vec![Vec::new(); d];
    for (v, ps) in parents.iter_mut().enumerate() {
        for u in 0..d {
            if u != v && rng.random_bool(p) {
                ps.push(u);
            }
        }
    }
    let mut latent_children: Vec<NodeSet> = Vec::with_capacity(k);
    while latent_children.len() < k {
        let pick: NodeSet = sample_indices(&mut rng, d, 2).into_iter().map(NodeId).collect();
        if !latent_children.contains(&pick) {
            latent_children.push(pick);
        }
    }
    let mut weights = Vec::with_capacity(d);
    for ps in &parents {
        let row = if ps.is_empty() { Vec::new() } else { sample_l1_ball(&mut rng, ps.len())? };
        weights.push(ps.iter().copied().zip(row).collect());
    }
    let bias = Normal::new(-0.5, 0.2).expect("valid normal");
    let biases = (0..d).map(|_| bias.sample(&mut rng)).collect();
    let mut m = Mscm::new(
        (1..=d).map(|i| format!("v{i}")).collect(),
        (1..=k).map(|i| format!("u{i}")).collect(),
        weights,
        latent_children,
        biases,
        vec![true; d],
    )?;
    m.seed = Some(seed);
    Ok(m)
}
