use std::fmt;

use smallvec::{smallvec, SmallVec};

use super::nodeset::{NodeId, NodeSet, MAX_NODES};
use super::GraphError;

/// End mark of an edge at one of its endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mark {
    Tail,
    Head,
}

impl Mark {
    pub const BOTH: [Mark; 2] = [Mark::Tail, Mark::Head];
}

/// Edge type, read off the pair of end marks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    /// tail → head
    Directed,
    /// head ↔ head
    Bidirected,
    /// tail — tail
    Undirected,
}

impl EdgeKind {
    pub fn from_marks(a: Mark, b: Mark) -> (EdgeKind, bool) {
        match (a, b) {
            (Mark::Tail, Mark::Head) => (EdgeKind::Directed, false),
            (Mark::Head, Mark::Tail) => (EdgeKind::Directed, true),
            (Mark::Head, Mark::Head) => (EdgeKind::Bidirected, false),
            (Mark::Tail, Mark::Tail) => (EdgeKind::Undirected, false),
        }
    }
}

/// A concrete edge. Directed edges are `(from, to)`; the symmetric kinds store
/// the smaller id first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub kind: EdgeKind,
    pub a: NodeId,
    pub b: NodeId,
}

/// Invariant violation reported by [`SigmaCG::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DirectedSelfLoop(NodeId),
    BidirectedSelfLoop(NodeId),
    /// `from` cannot reach `to` via directed edges that stay inside their shared class.
    ClassNotLoop { from: NodeId, to: NodeId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DirectedSelfLoop(v) => write!(f, "directed self-loop at {v}"),
            Violation::BidirectedSelfLoop(v) => write!(f, "bidirected self-loop at {v}"),
            Violation::ClassNotLoop { from, to } => write!(
                f,
                "class not a loop: {from} does not reach {to} through members of its class"
            ),
        }
    }
}

type Adj = SmallVec<[NodeSet; 16]>;

/// σ-connection graph: a mixed graph over a fixed node universe together with a
/// partition of the present nodes into classes.
///
/// Node ids are never renumbered. Marginalising or conditioning a node clears it
/// from [`SigmaCG::nodes`] while every other id keeps its meaning.
#[derive(Clone)]
pub struct SigmaCG {
    universe: usize,
    present: NodeSet,
    children: Adj,
    parents: Adj,
    bidirected: Adj,
    undirected: Adj,
    /// Class label per node id. Two present nodes share a class iff labels match.
    class: SmallVec<[u8; 16]>,
}

impl SigmaCG {
    /// Edgeless graph on `n` nodes with the singleton partition.
    pub fn new(n: usize) -> Result<SigmaCG, GraphError> {
        if n > MAX_NODES {
            return Err(GraphError::TooManyNodes(n));
        }
        Ok(SigmaCG {
            universe: n,
            present: NodeSet::full(n),
            children: smallvec![NodeSet::EMPTY; n],
            parents: smallvec![NodeSet::EMPTY; n],
            bidirected: smallvec![NodeSet::EMPTY; n],
            undirected: smallvec![NodeSet::EMPTY; n],
            class: (0..n as u8).collect(),
        })
    }

    /// Size of the id space (including removed nodes).
    #[inline]
    pub fn universe(&self) -> usize {
        self.universe
    }

    #[inline]
    pub fn nodes(&self) -> NodeSet {
        self.present
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.present.len()
    }

    #[inline]
    pub fn contains(&self, v: NodeId) -> bool {
        v.0 < self.universe && self.present.contains(v)
    }

    pub(crate) fn check(&self, v: NodeId) -> Result<(), GraphError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(GraphError::NodeNotFound(v))
        }
    }

    pub fn add_directed(&mut self, from: NodeId, to: NodeId) -> Result<(), GraphError> {
        self.check(from)?;
        self.check(to)?;
        self.children[from.0].insert(to);
        self.parents[to.0].insert(from);
        Ok(())
    }

    pub fn add_bidirected(&mut self, a: NodeId, b: NodeId) -> Result<(), GraphError> {
        self.check(a)?;
        self.check(b)?;
        self.bidirected[a.0].insert(b);
        self.bidirected[b.0].insert(a);
        Ok(())
    }

    pub fn add_undirected(&mut self, a: NodeId, b: NodeId) -> Result<(), GraphError> {
        self.check(a)?;
        self.check(b)?;
        self.undirected[a.0].insert(b);
        self.undirected[b.0].insert(a);
        Ok(())
    }

    pub fn remove_directed(&mut self, from: NodeId, to: NodeId) {
        if from.0 < self.universe && to.0 < self.universe {
            self.children[from.0].remove(to);
            self.parents[to.0].remove(from);
        }
    }

    pub fn remove_bidirected(&mut self, a: NodeId, b: NodeId) {
        if a.0 < self.universe && b.0 < self.universe {
            self.bidirected[a.0].remove(b);
            self.bidirected[b.0].remove(a);
        }
    }

    #[inline]
    pub fn children(&self, v: NodeId) -> NodeSet {
        self.children[v.0]
    }

    #[inline]
    pub fn parents(&self, v: NodeId) -> NodeSet {
        self.parents[v.0]
    }

    /// Bidirected neighbours.
    #[inline]
    pub fn spouses(&self, v: NodeId) -> NodeSet {
        self.bidirected[v.0]
    }

    /// Undirected neighbours, including `v` itself when it carries a self-loop.
    #[inline]
    pub fn undirected_neighbors(&self, v: NodeId) -> NodeSet {
        self.undirected[v.0]
    }

    pub fn has_directed(&self, from: NodeId, to: NodeId) -> bool {
        self.contains(from) && self.children[from.0].contains(to)
    }

    pub fn has_bidirected(&self, a: NodeId, b: NodeId) -> bool {
        self.contains(a) && self.bidirected[a.0].contains(b)
    }

    pub fn has_undirected(&self, a: NodeId, b: NodeId) -> bool {
        self.contains(a) && self.undirected[a.0].contains(b)
    }

    /// Nodes joined to `v` by an edge with mark `at_v` at `v` and `at_other` at
    /// the other end.
    #[inline]
    pub fn adj(&self, v: NodeId, at_v: Mark, at_other: Mark) -> NodeSet {
        match (at_v, at_other) {
            (Mark::Tail, Mark::Head) => self.children[v.0],
            (Mark::Head, Mark::Tail) => self.parents[v.0],
            (Mark::Head, Mark::Head) => self.bidirected[v.0],
            (Mark::Tail, Mark::Tail) => self.undirected[v.0],
        }
    }

    #[inline]
    fn adj_mut(&mut self, v: NodeId, at_v: Mark, at_other: Mark) -> &mut NodeSet {
        match (at_v, at_other) {
            (Mark::Tail, Mark::Head) => &mut self.children[v.0],
            (Mark::Head, Mark::Tail) => &mut self.parents[v.0],
            (Mark::Head, Mark::Head) => &mut self.bidirected[v.0],
            (Mark::Tail, Mark::Tail) => &mut self.undirected[v.0],
        }
    }

    /// Every node adjacent to `v` through any edge type.
    #[inline]
    pub fn neighbors(&self, v: NodeId) -> NodeSet {
        self.children[v.0] | self.parents[v.0] | self.bidirected[v.0] | self.undirected[v.0]
    }

    /// All edges between present nodes, sorted.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for u in self.present {
            for v in self.children[u.0] & self.present {
                out.push(Edge { kind: EdgeKind::Directed, a: u, b: v });
            }
            for v in self.bidirected[u.0] & self.present {
                if u <= v {
                    out.push(Edge { kind: EdgeKind::Bidirected, a: u, b: v });
                }
            }
            for v in self.undirected[u.0] & self.present {
                if u <= v {
                    out.push(Edge { kind: EdgeKind::Undirected, a: u, b: v });
                }
            }
        }
        out.sort();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    // ---- σ-partition -------------------------------------------------------

    #[inline]
    pub fn same_class(&self, u: NodeId, v: NodeId) -> bool {
        self.class[u.0] == self.class[v.0]
    }

    /// Present members of `v`'s class.
    pub fn class_of(&self, v: NodeId) -> NodeSet {
        let label = self.class[v.0];
        self.present.iter().filter(|u| self.class[u.0] == label).collect()
    }

    /// Classes of the partition over present nodes, ordered by smallest member.
    pub fn classes(&self) -> Vec<NodeSet> {
        let mut seen = NodeSet::EMPTY;
        let mut out = Vec::new();
        for v in self.present {
            if !seen.contains(v) {
                let c = self.class_of(v);
                seen |= c;
                out.push(c);
            }
        }
        out
    }

    /// Replace the partition. Every present node must appear in exactly one class;
    /// nodes not mentioned become singletons.
    pub fn set_sigma(&mut self, classes: &[NodeSet]) -> Result<(), GraphError> {
        let mut seen = NodeSet::EMPTY;
        let mut label: SmallVec<[u8; 16]> = (0..self.universe as u8).collect();
        for c in classes {
            if !c.is_subset(self.present) {
                let bad = (*c - self.present).first().unwrap();
                return Err(GraphError::NodeNotFound(bad));
            }
            if c.intersects(seen) {
                return Err(GraphError::OverlappingClasses((*c & seen).first().unwrap()));
            }
            seen |= *c;
            if let Some(rep) = c.first() {
                for v in *c {
                    label[v.0] = rep.0 as u8;
                }
            }
        }
        self.class = label;
        Ok(())
    }

    /// Descendants of every node over directed edges inside `within` (reflexive).
    fn reach_within(&self, within: NodeSet) -> SmallVec<[NodeSet; 16]> {
        let mut reach: SmallVec<[NodeSet; 16]> = smallvec![NodeSet::EMPTY; self.universe];
        for v in within {
            let mut seen = NodeSet::singleton(v);
            let mut frontier = seen;
            while let Some(u) = frontier.first() {
                frontier.remove(u);
                let next = self.children[u.0] & within & !seen;
                seen |= next;
                frontier |= next;
            }
            reach[v.0] = seen;
        }
        reach
    }

    /// `Sc(v) = Anc(v) ∩ Desc(v)` over the directed edges, one set per component,
    /// ordered by smallest member.
    pub fn strongly_connected_components(&self) -> Vec<NodeSet> {
        let reach = self.reach_within(self.present);
        let mut seen = NodeSet::EMPTY;
        let mut out = Vec::new();
        for v in self.present {
            if seen.contains(v) {
                continue;
            }
            let sc: NodeSet = reach[v.0].iter().filter(|u| reach[u.0].contains(v)).collect();
            seen |= sc;
            out.push(sc);
        }
        out
    }

    /// Strongly connected components of the subgraph induced by `within`.
    pub fn components_within(&self, within: NodeSet) -> Vec<NodeSet> {
        let within = within & self.present;
        let reach = self.reach_within(within);
        let mut seen = NodeSet::EMPTY;
        let mut out = Vec::new();
        for v in within {
            if !seen.contains(v) {
                let sc: NodeSet = reach[v.0].iter().filter(|u| reach[u.0].contains(v)).collect();
                seen |= sc;
                out.push(sc);
            }
        }
        out
    }

    /// Components of the directed part in a topological order of the condensation.
    pub fn scc_topological_order(&self) -> Vec<NodeSet> {
        let mut comps = self.strongly_connected_components();
        let mut order = Vec::with_capacity(comps.len());
        let mut placed = NodeSet::EMPTY;
        while !comps.is_empty() {
            let idx = comps
                .iter()
                .position(|c| {
                    c.iter().all(|v| (self.parents[v.0] & self.present).is_subset(placed | *c))
                })
                .expect("condensation of a directed graph is acyclic");
            let c = comps.remove(idx);
            placed |= c;
            order.push(c);
        }
        order
    }

    /// True if the directed part has no cycle.
    pub fn is_acyclic(&self) -> bool {
        self.present.iter().all(|v| !self.children[v.0].contains(v))
            && self.strongly_connected_components().iter().all(|c| c.len() == 1)
    }

    /// Same edges, partition replaced by the strongly connected components.
    pub fn coarsest_sigma(&self) -> SigmaCG {
        let mut g = self.clone();
        let comps = self.strongly_connected_components();
        g.set_sigma(&comps).expect("components partition the present nodes");
        g
    }

    /// Same edges, singleton partition.
    pub fn finest_sigma(&self) -> SigmaCG {
        let mut g = self.clone();
        g.class = (0..self.universe as u8).collect();
        g
    }

    /// Check every structural invariant, reporting the first violation found.
    pub fn validate(&self) -> Result<(), Violation> {
        for v in self.present {
            if self.children[v.0].contains(v) {
                return Err(Violation::DirectedSelfLoop(v));
            }
            if self.bidirected[v.0].contains(v) {
                return Err(Violation::BidirectedSelfLoop(v));
            }
        }
        for class in self.classes() {
            if class.len() == 1 {
                continue;
            }
            let reach = self.reach_within(class);
            for u in class {
                if let Some(to) = (class - reach[u.0]).first() {
                    return Err(Violation::ClassNotLoop { from: u, to });
                }
            }
        }
        Ok(())
    }

    // ---- removal (used by marginalisation / conditioning) ----------------

    pub(crate) fn empty_like(&self) -> SigmaCG {
        SigmaCG {
            universe: self.universe,
            present: self.present,
            children: smallvec![NodeSet::EMPTY; self.universe],
            parents: smallvec![NodeSet::EMPTY; self.universe],
            bidirected: smallvec![NodeSet::EMPTY; self.universe],
            undirected: smallvec![NodeSet::EMPTY; self.universe],
            class: self.class.clone(),
        }
    }

    #[inline]
    pub(crate) fn set_adj(&mut self, v: NodeId, at_v: Mark, at_other: Mark, set: NodeSet) {
        *self.adj_mut(v, at_v, at_other) = set;
    }

    #[inline]
    pub(crate) fn drop_node(&mut self, v: NodeId) {
        self.present.remove(v);
        self.children[v.0] = NodeSet::EMPTY;
        self.parents[v.0] = NodeSet::EMPTY;
        self.bidirected[v.0] = NodeSet::EMPTY;
        self.undirected[v.0] = NodeSet::EMPTY;
    }

    /// Restrict to `keep`, removing every edge touching other nodes. Classes are
    /// restricted accordingly.
    pub fn induced_subgraph(&self, keep: NodeSet) -> SigmaCG {
        let mut g = self.clone();
        let keep = keep & self.present;
        for v in self.present - keep {
            g.drop_node(v);
        }
        for v in keep {
            g.children[v.0] &= keep;
            g.parents[v.0] &= keep;
            g.bidirected[v.0] &= keep;
            g.undirected[v.0] &= keep;
        }
        g
    }

    /// Canonical representation: sorted edge lists and the smallest-member
    /// representative of every node's class.
    pub fn canonical(&self) -> CanonicalGraph {
        let mut directed = Vec::new();
        let mut bidirected = Vec::new();
        let mut undirected = Vec::new();
        for e in self.edges() {
            let pair = (e.a.0 as u8, e.b.0 as u8);
            match e.kind {
                EdgeKind::Directed => directed.push(pair),
                EdgeKind::Bidirected => bidirected.push(pair),
                EdgeKind::Undirected => undirected.push(pair),
            }
        }
        let mut reps = vec![u8::MAX; self.universe];
        for class in self.classes() {
            let rep = class.first().unwrap().0 as u8;
            for v in class {
                reps[v.0] = rep;
            }
        }
        CanonicalGraph {
            universe: self.universe as u8,
            nodes: self.present.0,
            directed,
            bidirected,
            undirected,
            sigma: reps,
        }
    }
}

/// Hashable canonical form of a [`SigmaCG`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalGraph {
    pub universe: u8,
    pub nodes: u64,
    pub directed: Vec<(u8, u8)>,
    pub bidirected: Vec<(u8, u8)>,
    pub undirected: Vec<(u8, u8)>,
    /// Class representative per node id (`u8::MAX` for removed nodes).
    pub sigma: Vec<u8>,
}

impl PartialEq for SigmaCG {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

impl Eq for SigmaCG {}

impl fmt::Debug for SigmaCG {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = self
            .edges()
            .iter()
            .map(|e| match e.kind {
                EdgeKind::Directed => format!("{}->{}", e.a.0, e.b.0),
                EdgeKind::Bidirected => format!("{}<->{}", e.a.0, e.b.0),
                EdgeKind::Undirected => format!("{}--{}", e.a.0, e.b.0),
            })
            .collect();
        f.debug_struct("SigmaCG")
            .field("nodes", &self.present)
            .field("edges", &edges)
            .field("sigma", &self.classes())
            .finish()
    }
}
