//! σ- and d-separation, decided two independent ways.
//!
//! The reduction route marginalises and conditions the graph down to `X ∪ Y`
//! and checks adjacency. The walk route searches σ-open walks directly; it is
//! the oracle the reduction route is tested against.

use super::nodeset::{NodeId, NodeSet};
use super::ops::reduce;
use super::sigma_cg::SigmaCG;
use super::GraphError;

/// A separation query `X ⊥ Y | Z`.
///
/// Construction removes `Z` from `X` and `Y` (conditioned nodes cannot be walk
/// endpoints). If the remaining `X` and `Y` overlap, the query is trivially
/// connected by a single-node walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeparationQuery {
    x: NodeSet,
    y: NodeSet,
    z: NodeSet,
}

impl SeparationQuery {
    pub fn new(x: NodeSet, y: NodeSet, z: NodeSet) -> SeparationQuery {
        SeparationQuery { x: x - z, y: y - z, z }
    }

    pub fn pair(x: NodeId, y: NodeId, z: NodeSet) -> SeparationQuery {
        SeparationQuery::new(NodeSet::singleton(x), NodeSet::singleton(y), z)
    }

    #[inline]
    pub fn x(&self) -> NodeSet {
        self.x
    }

    #[inline]
    pub fn y(&self) -> NodeSet {
        self.y
    }

    #[inline]
    pub fn z(&self) -> NodeSet {
        self.z
    }

    /// `X ∩ Y` after removing `Z`; nonempty means trivially connected.
    #[inline]
    pub fn overlap(&self) -> NodeSet {
        self.x & self.y
    }

    pub fn swapped(&self) -> SeparationQuery {
        SeparationQuery { x: self.y, y: self.x, z: self.z }
    }

    fn check(&self, g: &SigmaCG) -> Result<(), GraphError> {
        match ((self.x | self.y | self.z) - g.nodes()).first() {
            Some(v) => Err(GraphError::NodeNotFound(v)),
            None => Ok(()),
        }
    }
}

/// Which decision procedure to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Reduction,
    Walk,
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "reduction" => Ok(Backend::Reduction),
            "walk" => Ok(Backend::Walk),
            other => Err(format!("unknown separation backend '{other}' (expected reduction|walk)")),
        }
    }
}

/// σ-separation decided with the chosen backend.
pub fn sigma_separated(g: &SigmaCG, q: &SeparationQuery, backend: Backend) -> Result<bool, GraphError> {
    match backend {
        Backend::Reduction => sigma_separated_reduction(g, q),
        Backend::Walk => sigma_separated_walk(g, q),
    }
}

/// σ-separation via marginalising `V ∖ (X ∪ Y ∪ Z)`, conditioning on `Z`, and
/// checking that no edge joins `X` and `Y`.
pub fn sigma_separated_reduction(g: &SigmaCG, q: &SeparationQuery) -> Result<bool, GraphError> {
    q.check(g)?;
    if !q.overlap().is_empty() {
        return Ok(false);
    }
    if q.x.is_empty() || q.y.is_empty() {
        return Ok(true);
    }
    let marginals = g.nodes() - (q.x | q.y | q.z);
    let reduced = reduce(g, marginals, q.z)?;
    Ok(q.x.iter().all(|x| !reduced.neighbors(x).intersects(q.y)))
}

/// σ-separation by searching for a σ-open walk between `X` and `Y`.
pub fn sigma_separated_walk(g: &SigmaCG, q: &SeparationQuery) -> Result<bool, GraphError> {
    q.check(g)?;
    if !q.overlap().is_empty() {
        return Ok(false);
    }
    Ok(!walk_search(g, q.x, q.z, q.y, false).0.intersects(q.y))
}

/// d-separation: σ-separation under the singleton partition.
pub fn d_separated(g: &SigmaCG, q: &SeparationQuery) -> Result<bool, GraphError> {
    sigma_separated_walk(&g.finest_sigma(), q)
}

/// Every node `y ∉ Z` that is σ-connected to some node of `from` given `z`.
/// Nodes of `from ∖ Z` are included (single-node walks).
pub fn sigma_reachable(g: &SigmaCG, from: NodeSet, z: NodeSet) -> NodeSet {
    let from = from & g.nodes() - z;
    walk_search(g, from, z, NodeSet::EMPTY, false).0 | from
}

/// A σ-open walk witnessing `X` and `Y` connected given `Z`, as a node sequence.
/// `None` means separated.
pub fn sigma_connecting_walk(g: &SigmaCG, q: &SeparationQuery) -> Result<Option<Vec<NodeId>>, GraphError> {
    q.check(g)?;
    if let Some(v) = q.overlap().first() {
        return Ok(Some(vec![v]));
    }
    let (_, walk) = walk_search(g, q.x, q.z, q.y, true);
    Ok(walk)
}

// Arrival states. A walk reaches node `v` by an edge whose mark at `v` is:
//   HEAD     : a head (directed into v, or bidirected);
//   TAIL_IN  : a tail of a directed edge `v → prev` with prev ∈ σ(v);
//   TAIL_OUT : a tail of a directed edge `v → prev` with prev ∉ σ(v);
//   UNDIR    : an end of an undirected edge.
// Openness of the next triple depends on nothing else, so these four states per
// node cover every walk, repeated nodes included.
const HEAD: usize = 0;
const TAIL_IN: usize = 1;
const TAIL_OUT: usize = 2;
const UNDIR: usize = 3;

#[derive(Clone, Copy)]
struct State {
    node: NodeId,
    kind: usize,
}

/// Breadth-first search over arrival states from `sources ∖ Z`.
/// Returns the set of nodes `∉ Z` reached by an open walk and, when
/// `want_walk` holds, the first walk reaching `targets`.
fn walk_search(
    g: &SigmaCG,
    sources: NodeSet,
    z: NodeSet,
    targets: NodeSet,
    want_walk: bool,
) -> (NodeSet, Option<Vec<NodeId>>) {
    let nodes = g.nodes();
    let sources = sources & nodes - z;
    let u = g.universe();
    let mut seen = [NodeSet::EMPTY; 4];
    let mut parent: Vec<Option<State>> = if want_walk { vec![None; u * 4] } else { Vec::new() };
    let mut start_of: Vec<NodeId> = if want_walk { vec![NodeId(0); u * 4] } else { Vec::new() };
    let mut queue: Vec<State> = Vec::with_capacity(4 * u);
    let mut reached = NodeSet::EMPTY;

    let push = |queue: &mut Vec<State>,
                    seen: &mut [NodeSet; 4],
                    from: Option<State>,
                    origin: NodeId,
                    next: State,
                    parent: &mut Vec<Option<State>>,
                    start_of: &mut Vec<NodeId>| {
        if !seen[next.kind].contains(next.node) {
            seen[next.kind].insert(next.node);
            if want_walk {
                parent[next.node.0 * 4 + next.kind] = from;
                start_of[next.node.0 * 4 + next.kind] = origin;
            }
            queue.push(next);
        }
    };

    for x in sources {
        // Leaving x: every edge is allowed, there is no triple at an endpoint.
        emit(g, x, true, true, true, true, |next| {
            push(&mut queue, &mut seen, None, x, next, &mut parent, &mut start_of)
        });
    }

    let mut head = 0;
    let mut hit: Option<State> = None;
    while head < queue.len() {
        let st = queue[head];
        head += 1;
        let v = st.node;
        if !z.contains(v) {
            reached.insert(v);
            if targets.contains(v) && hit.is_none() {
                hit = Some(st);
                if want_walk {
                    break;
                }
            }
        }
        let in_z = z.contains(v);
        // Which departures are open, by the mark at v of the leaving edge.
        let (dep_head, dep_tail_any, dep_tail_class, dep_undir) = match (st.kind, in_z) {
            (UNDIR, false) => (true, true, true, true),
            (UNDIR, true) => (false, false, false, false),
            (HEAD, false) => (false, true, true, true),
            (HEAD, true) => (true, false, true, false),
            (TAIL_IN, false) | (TAIL_OUT, false) => (true, true, true, true),
            (TAIL_IN, true) => (true, false, true, false),
            (TAIL_OUT, true) => (false, false, false, false),
            _ => unreachable!(),
        };
        emit(g, v, dep_head, dep_tail_any, dep_tail_class, dep_undir, |next| {
            push(&mut queue, &mut seen, Some(st), NodeId(0), next, &mut parent, &mut start_of)
        });
    }

    let walk = if want_walk {
        hit.map(|end| {
            let mut seq = vec![end.node];
            let mut cur = end;
            loop {
                match parent[cur.node.0 * 4 + cur.kind] {
                    Some(p) => {
                        seq.push(p.node);
                        cur = p;
                    }
                    None => {
                        seq.push(start_of[cur.node.0 * 4 + cur.kind]);
                        break;
                    }
                }
            }
            seq.reverse();
            seq
        })
    } else {
        None
    };
    (reached, walk)
}

/// Departures from `v`:
/// * `head`: edges with a head at `v` (to parents, spouses);
/// * `tail_any`: directed `v → q` for any `q`;
/// * `tail_class`: directed `v → q` with `q ∈ σ(v)` (subsumed by `tail_any`);
/// * `undir`: undirected edges at `v`.
#[inline]
fn emit(
    g: &SigmaCG,
    v: NodeId,
    head: bool,
    tail_any: bool,
    tail_class: bool,
    undir: bool,
    mut f: impl FnMut(State),
) {
    let nodes = g.nodes();
    if head {
        // v ← q : arrives at q with a tail, classed by whether v ∈ σ(q).
        for q in g.parents(v) & nodes {
            let kind = if g.same_class(q, v) { TAIL_IN } else { TAIL_OUT };
            f(State { node: q, kind });
        }
        for q in g.spouses(v) & nodes {
            f(State { node: q, kind: HEAD });
        }
    }
    if tail_any || tail_class {
        let mut ch = g.children(v) & nodes;
        if !tail_any {
            ch = ch.iter().filter(|&q| g.same_class(q, v)).collect();
        }
        for q in ch {
            f(State { node: q, kind: HEAD });
        }
    }
    if undir {
        for q in g.undirected_neighbors(v) & nodes {
            f(State { node: q, kind: UNDIR });
        }
    }
}
