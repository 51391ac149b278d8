//! Hand-built models.

use super::Mscm;
use crate::graph::{NodeId, NodeSet};

fn set(ids: &[usize]) -> NodeSet {
    ids.iter().map(|&i| NodeId(i)).collect()
}

/// Directed four-cycle `v2 → v3 → v4 → v5 → v2` with every mechanism
/// `tanh(0.9 x + 0.5) + E` and independent standard-normal `E`.
pub fn four_cycle() -> Mscm {
    Mscm::new(
        vec!["v2".into(), "v3".into(), "v4".into(), "v5".into()],
        vec![],
        vec![vec![(3, 0.9)], vec![(0, 0.9)], vec![(1, 0.9)], vec![(2, 0.9)]],
        vec![],
        vec![0.5; 4],
        vec![true; 4],
    )
    .expect("contractive")
}

/// Eight observed nodes `v1..v8` and five latents: `u1 → {v1, v2}`,
/// `u2 → {v8}`, `u3 → {v3}`, `u4 → {v4, v6, v7}`, `u5 → {v5}`. Observed edges
/// `v1 → v2`, the cycle `v2 → v3 → v4 → v5 → v2`, `v4 → v8` and `v6 ⇄ v7`.
/// All noise enters through the latents.
pub fn eight_node() -> Mscm {
    let v = |i: usize| i - 1;
    let mut w = vec![Vec::new(); 8];
    w[v(2)] = vec![(v(1), 0.4), (v(5), 0.5)];
    w[v(3)] = vec![(v(2), 0.8)];
    w[v(4)] = vec![(v(3), -0.7)];
    w[v(5)] = vec![(v(4), 0.9)];
    w[v(8)] = vec![(v(4), 0.6)];
    w[v(6)] = vec![(v(7), 0.5)];
    w[v(7)] = vec![(v(6), -0.6)];
    Mscm::new(
        (1..=8).map(|i| format!("v{i}")).collect(),
        (1..=5).map(|i| format!("u{i}")).collect(),
        w,
        vec![set(&[v(1), v(2)]), set(&[v(8)]), set(&[v(3)]), set(&[v(4), v(6), v(7)]), set(&[v(5)])],
        vec![-0.5, -0.3, -0.6, -0.4, -0.5, -0.7, -0.2, -0.5],
        vec![false; 8],
    )
    .expect("contractive")
}
