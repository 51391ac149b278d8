use serde::{Deserialize, Serialize};

use crate::graph::{intervene, NodeId, NodeSet, SigmaCG};

/// Largest node count whose edge slots fit in a `u64` code.
pub const MAX_HYPOTHESIS_NODES: usize = 7;

/// Edge kind of a hypothesis slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Directed,
    Bidirected,
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeatureKind::Directed => "directed",
            FeatureKind::Bidirected => "bidirected",
        })
    }
}

/// Presence of one possible edge: `from → to` or `from ↔ to` (`from < to`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Feature {
    pub kind: FeatureKind,
    pub from: NodeId,
    pub to: NodeId,
}

/// Numbering of the possible edges over `d` nodes: directed `(u, v)` in
/// lexicographic order, then bidirected `{u, v}` with `u < v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotLayout {
    d: usize,
    slots: Vec<Feature>,
}

impl SlotLayout {
    pub fn new(d: usize) -> SlotLayout {
        assert!(d <= MAX_HYPOTHESIS_NODES, "at most {MAX_HYPOTHESIS_NODES} nodes");
        let mut slots = Vec::new();
        for u in 0..d {
            for v in (0..d).filter(|&v| v != u) {
                slots.push(Feature { kind: FeatureKind::Directed, from: NodeId(u), to: NodeId(v) });
            }
        }
        for u in 0..d {
            for v in u + 1..d {
                slots.push(Feature { kind: FeatureKind::Bidirected, from: NodeId(u), to: NodeId(v) });
            }
        }
        SlotLayout { d, slots }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn features(&self) -> &[Feature] {
        &self.slots
    }

    pub fn all(&self) -> u64 {
        if self.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.len()) - 1
        }
    }

    pub fn directed_mask(&self) -> u64 {
        (1u64 << (self.d * (self.d.max(1) - 1))) - 1
    }

    pub fn slot_of(&self, f: &Feature) -> Option<usize> {
        self.slots.iter().position(|s| s == f)
    }

    /// Slots that survive an intervention on `targets`.
    pub fn surviving(&self, targets: NodeSet) -> u64 {
        let mut m = 0;
        for (i, s) in self.slots.iter().enumerate() {
            let cut = match s.kind {
                FeatureKind::Directed => targets.contains(s.to),
                FeatureKind::Bidirected => targets.contains(s.from) || targets.contains(s.to),
            };
            if !cut {
                m |= 1 << i;
            }
        }
        m
    }

    /// The σ-CG of `code`, classes being strongly connected components.
    pub fn sigma_cg(&self, code: u64) -> SigmaCG {
        let mut g = SigmaCG::new(self.d).expect("small graph");
        let mut bits = code;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let s = self.slots[i];
            match s.kind {
                FeatureKind::Directed => g.add_directed(s.from, s.to).unwrap(),
                FeatureKind::Bidirected => g.add_bidirected(s.from, s.to).unwrap(),
            }
        }
        g.coarsest_sigma()
    }

    pub fn code_of(&self, g: &SigmaCG) -> u64 {
        let mut code = 0;
        for (i, s) in self.slots.iter().enumerate() {
            let on = match s.kind {
                FeatureKind::Directed => g.has_directed(s.from, s.to),
                FeatureKind::Bidirected => g.has_bidirected(s.from, s.to),
            };
            if on {
                code |= 1 << i;
            }
        }
        code
    }

    /// True if the directed slots of `code` form no cycle.
    pub fn is_acyclic(&self, code: u64) -> bool {
        let d = self.d;
        let mut children = [0u8; MAX_HYPOTHESIS_NODES];
        let mut bits = code & self.directed_mask();
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let s = self.slots[i];
            children[s.from.0] |= 1 << s.to.0;
        }
        // Kahn's algorithm on bitmasks.
        let mut remaining: u8 = ((1u16 << d) - 1) as u8;
        loop {
            let mut removed = false;
            for v in 0..d {
                if remaining & (1 << v) != 0 {
                    let has_parent = (0..d).any(|u| remaining & (1 << u) != 0 && children[u] & (1 << v) != 0);
                    if !has_parent {
                        remaining &= !(1 << v);
                        removed = true;
                    }
                }
            }
            if remaining == 0 {
                return true;
            }
            if !removed {
                return false;
            }
        }
    }
}

/// A hypothesis causal graph: directed and bidirected edges, no undirected
/// ones, classes the strongly connected components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypothesisGraph {
    graph: SigmaCG,
}

impl HypothesisGraph {
    pub fn new(d: usize) -> HypothesisGraph {
        HypothesisGraph { graph: SigmaCG::new(d).expect("node count within limits") }
    }

    /// Accepts any σ-CG without undirected edges; the partition is replaced by
    /// the strongly connected components.
    pub fn from_sigma_cg(g: &SigmaCG) -> Result<HypothesisGraph, String> {
        if g.nodes() != NodeSet::full(g.universe()) {
            return Err("hypothesis graphs cannot have removed nodes".into());
        }
        if g.edges().iter().any(|e| e.kind == crate::graph::EdgeKind::Undirected) {
            return Err("hypothesis graphs have no undirected edges".into());
        }
        g.validate().map_err(|e| e.to_string())?;
        Ok(HypothesisGraph { graph: g.coarsest_sigma() })
    }

    pub fn from_code(layout: &SlotLayout, code: u64) -> HypothesisGraph {
        HypothesisGraph { graph: layout.sigma_cg(code) }
    }

    pub fn add_directed(&mut self, from: NodeId, to: NodeId) {
        assert_ne!(from, to, "no directed self-loops");
        self.graph.add_directed(from, to).expect("node in range");
        self.graph = self.graph.coarsest_sigma();
    }

    pub fn add_bidirected(&mut self, a: NodeId, b: NodeId) {
        assert_ne!(a, b, "no bidirected self-loops");
        self.graph.add_bidirected(a, b).expect("node in range");
    }

    pub fn d(&self) -> usize {
        self.graph.universe()
    }

    pub fn sigma_cg(&self) -> &SigmaCG {
        &self.graph
    }

    pub fn code(&self, layout: &SlotLayout) -> u64 {
        layout.code_of(&self.graph)
    }

    pub fn has(&self, f: &Feature) -> bool {
        match f.kind {
            FeatureKind::Directed => self.graph.has_directed(f.from, f.to),
            FeatureKind::Bidirected => self.graph.has_bidirected(f.from, f.to),
        }
    }
}

/// `G` after a perfect intervention on `targets`: edges into targets and
/// bidirected edges at targets removed, classes recomputed.
pub fn intervened_graph(g: &HypothesisGraph, targets: NodeSet) -> Result<SigmaCG, crate::graph::GraphError> {
    intervene(&g.graph, targets)
}
