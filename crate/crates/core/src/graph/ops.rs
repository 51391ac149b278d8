//! Marginalisation and conditioning of σ-connection graphs.
//!
//! Both operations are phrased in terms of end marks. An edge between `v1` and
//! `v2` is identified by its mark at `v1` and its mark at `v2`; tail/head gives a
//! directed edge, head/head a bidirected one and tail/tail an undirected one.
//! Undirected ends count as tails. Directed and bidirected self-loops produced by
//! composing two edges are dropped; undirected self-loops are kept.

use super::nodeset::{NodeId, NodeSet};
use super::sigma_cg::{Mark, SigmaCG};
use super::GraphError;

use Mark::{Head as H, Tail as T};

#[inline]
fn finish(out: NodeSet, v1: NodeId, a: Mark, b: Mark, removed: NodeId) -> NodeSet {
    let out = out.without(removed);
    if a == T && b == T {
        out
    } else {
        out.without(v1)
    }
}

/// Marginalise `w` out of `g`.
///
/// An edge `v1 a—b v2` is present in the result iff
/// 1. it is present in `g`, or
/// 2. `g` has `v1 a—T w` and `w ?—b v2`, or
/// 3. `g` has `v1 a—? w` and `w T—b v2`, or
/// 4. `g` has `v1 a—H w`, the self-loop `w — w`, and `w H—b v2`.
///
/// Classes are inherited with `w` removed.
pub fn marginalise(g: &SigmaCG, w: NodeId) -> Result<SigmaCG, GraphError> {
    g.check(w)?;
    let mut out = g.empty_like();
    let w_self_loop = g.undirected_neighbors(w).contains(w);
    let rest = g.nodes().without(w);
    for v1 in rest {
        for a in Mark::BOTH {
            let tail_at_w = g.adj(v1, a, T).contains(w);
            let head_at_w = g.adj(v1, a, H).contains(w);
            for b in Mark::BOTH {
                let mut set = g.adj(v1, a, b);
                if tail_at_w {
                    set |= g.adj(w, T, b) | g.adj(w, H, b);
                }
                if tail_at_w || head_at_w {
                    set |= g.adj(w, T, b);
                }
                if head_at_w && w_self_loop {
                    set |= g.adj(w, H, b);
                }
                out.set_adj(v1, a, b, finish(set & rest, v1, a, b, w));
            }
        }
    }
    out.drop_node(w);
    debug_assert!(symmetric(&out));
    Ok(out)
}

/// Condition `g` on `c`.
///
/// An edge `v1 a—b v2` is present in the result iff
/// 1. it is present in `g`, or
/// 2. `g` has the collider `v1 a—H c H—b v2`, or
/// 3. `g` has `v1 ← c` and `c H—b v2` with `σ(v1) = σ(c)` (then `a = H`), or
/// 4. `g` has `v1 a—H c` and `c → v2` with `σ(c) = σ(v2)` (then `b = H`), or
/// 5. `g` has `v1 ← c → v2` with all three in one class (then `v1 ↔ v2`).
///
/// Undirected edges at `c` take part in no rule.
pub fn condition(g: &SigmaCG, c: NodeId) -> Result<SigmaCG, GraphError> {
    g.check(c)?;
    let mut out = g.empty_like();
    let rest = g.nodes().without(c);
    let class_c = g.class_of(c);
    let c_children_in_class = g.children(c) & class_c;
    for v1 in rest {
        let c_parent_in_class = g.parents(v1).contains(c) && g.same_class(v1, c);
        for a in Mark::BOTH {
            let head_at_c = g.adj(v1, a, H).contains(c);
            for b in Mark::BOTH {
                let mut set = g.adj(v1, a, b);
                if head_at_c {
                    set |= g.adj(c, H, b);
                }
                if a == H && c_parent_in_class {
                    set |= g.adj(c, H, b);
                }
                if b == H && head_at_c {
                    set |= c_children_in_class;
                }
                if a == H && b == H && c_parent_in_class {
                    set |= c_children_in_class;
                }
                out.set_adj(v1, a, b, finish(set & rest, v1, a, b, c));
            }
        }
    }
    out.drop_node(c);
    debug_assert!(symmetric(&out));
    Ok(out)
}

/// Marginalise every node of `marginals`, then condition on every node of
/// `conditionals`, each in descending id order.
pub fn reduce(g: &SigmaCG, marginals: NodeSet, conditionals: NodeSet) -> Result<SigmaCG, GraphError> {
    if let Some(v) = (marginals & conditionals).first() {
        return Err(GraphError::MarginalConditionalOverlap(v));
    }
    if let Some(v) = ((marginals | conditionals) - g.nodes()).first() {
        return Err(GraphError::NodeNotFound(v));
    }
    let mut cur = g.clone();
    for w in marginals.iter_desc() {
        cur = marginalise(&cur, w)?;
    }
    for c in conditionals.iter_desc() {
        cur = condition(&cur, c)?;
    }
    Ok(cur)
}

/// Like [`reduce`] but in caller-supplied order; used to check order independence.
pub fn reduce_in_order(
    g: &SigmaCG,
    marginals: &[NodeId],
    conditionals: &[NodeId],
) -> Result<SigmaCG, GraphError> {
    let mut cur = g.clone();
    for &w in marginals {
        cur = marginalise(&cur, w)?;
    }
    for &c in conditionals {
        cur = condition(&cur, c)?;
    }
    Ok(cur)
}

/// Perfect intervention on `targets`: drop every directed edge into a target and
/// every bidirected edge at a target, then recompute the strongly connected
/// components as classes.
pub fn intervene(g: &SigmaCG, targets: NodeSet) -> Result<SigmaCG, GraphError> {
    if let Some(v) = (targets - g.nodes()).first() {
        return Err(GraphError::NodeNotFound(v));
    }
    let mut out = g.clone();
    for t in targets {
        for p in g.parents(t) {
            out.remove_directed(p, t);
        }
        for s in g.spouses(t) {
            out.remove_bidirected(s, t);
        }
    }
    Ok(out.coarsest_sigma())
}

fn symmetric(g: &SigmaCG) -> bool {
    g.nodes().iter().all(|v| {
        Mark::BOTH.iter().all(|&a| {
            Mark::BOTH
                .iter()
                .all(|&b| g.adj(v, a, b).iter().all(|u| g.adj(u, b, a).contains(v)))
        })
    })
}
