//! Small reference graphs used throughout the tests and documentation.

use super::{NamedGraph, NodeId, SigmaCG};

fn named(n: usize, g: SigmaCG) -> NamedGraph {
    NamedGraph::new((1..=n).map(|i| format!("v{i}")).collect(), g)
}

fn v(i: usize) -> NodeId {
    NodeId(i - 1)
}

/// Eight observed nodes `v1..v8`: a directed four-cycle `v2 → v3 → v4 → v5 → v2`
/// entered from `v1`, a two-cycle `v6 ⇄ v7`, `v4 → v8`, and confounding
/// `v1 ↔ v2`, `v4 ↔ v6`, `v6 ↔ v7`, `v4 ↔ v7`. Classes are the strongly
/// connected components `{v1}, {v2..v5}, {v6, v7}, {v8}`.
pub fn feedback_eight() -> NamedGraph {
    let mut g = SigmaCG::new(8).unwrap();
    for (a, b) in [(1, 2), (2, 3), (3, 4), (4, 5), (5, 2), (4, 8), (6, 7), (7, 6)] {
        g.add_directed(v(a), v(b)).unwrap();
    }
    for (a, b) in [(1, 2), (4, 6), (6, 7), (4, 7)] {
        g.add_bidirected(v(a), v(b)).unwrap();
    }
    named(8, g.coarsest_sigma())
}

/// Six-node DAG `v1 → v2 → v3 → v4 → v5 → v6` with the shortcut `v1 → v6`.
pub fn shortcut_chain_six() -> NamedGraph {
    let mut g = SigmaCG::new(6).unwrap();
    for (a, b) in [(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (1, 6)] {
        g.add_directed(v(a), v(b)).unwrap();
    }
    named(6, g)
}
