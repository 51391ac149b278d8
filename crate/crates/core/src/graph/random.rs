//! Random σ-connection graphs for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{NodeId, NodeSet, SigmaCG};

/// Edge probabilities for [`random_graph`].
#[derive(Clone, Copy, Debug)]
pub struct GraphDensity {
    pub directed: f64,
    pub bidirected: f64,
    pub undirected: f64,
    /// Probability of an undirected self-loop at each node.
    pub self_loop: f64,
}

impl GraphDensity {
    /// Directed and bidirected edges only.
    pub fn mixed(directed: f64, bidirected: f64) -> GraphDensity {
        GraphDensity { directed, bidirected, undirected: 0.0, self_loop: 0.0 }
    }

    /// Densities drawn uniformly, with occasional undirected parts.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> GraphDensity {
        let with_undirected = rng.random_bool(0.3);
        GraphDensity {
            directed: rng.random_range(0.05..0.6),
            bidirected: rng.random_range(0.0..0.4),
            undirected: if with_undirected { rng.random_range(0.0..0.3) } else { 0.0 },
            self_loop: if with_undirected { rng.random_range(0.0..0.5) } else { 0.0 },
        }
    }
}

/// How to choose the partition of a random graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigmaChoice {
    Finest,
    Coarsest,
    /// A random refinement of the strongly connected components whose classes
    /// are still loops.
    Between,
}

/// Random graph over `n` nodes with the given densities and partition.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, n: usize, density: GraphDensity, sigma: SigmaChoice) -> SigmaCG {
    let mut g = SigmaCG::new(n).expect("node count within limits");
    for a in 0..n {
        if rng.random_bool(density.self_loop) {
            g.add_undirected(NodeId(a), NodeId(a)).unwrap();
        }
        for b in 0..n {
            if a != b && rng.random_bool(density.directed) {
                g.add_directed(NodeId(a), NodeId(b)).unwrap();
            }
            if a < b && rng.random_bool(density.bidirected) {
                g.add_bidirected(NodeId(a), NodeId(b)).unwrap();
            }
            if a < b && rng.random_bool(density.undirected) {
                g.add_undirected(NodeId(a), NodeId(b)).unwrap();
            }
        }
    }
    match sigma {
        SigmaChoice::Finest => g.finest_sigma(),
        SigmaChoice::Coarsest => g.coarsest_sigma(),
        SigmaChoice::Between => {
            let mut classes = Vec::new();
            for comp in g.strongly_connected_components() {
                let k = rng.random_range(1..=comp.len());
                let mut blocks = vec![NodeSet::EMPTY; k];
                for v in comp {
                    blocks[rng.random_range(0..k)].insert(v);
                }
                for b in blocks.into_iter().filter(|b| !b.is_empty()) {
                    classes.extend(g.components_within(b));
                }
            }
            g.set_sigma(&classes).expect("classes partition the nodes");
            g
        }
    }
}

/// Random directed acyclic graph: edges respect a random topological order.
pub fn random_dag<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64, bidirected: f64) -> SigmaCG {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut g = SigmaCG::new(n).expect("node count within limits");
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                g.add_directed(NodeId(order[i]), NodeId(order[j])).unwrap();
            }
            if rng.random_bool(bidirected) {
                g.add_bidirected(NodeId(order[i]), NodeId(order[j])).unwrap();
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_partitions_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let d = GraphDensity::random(&mut rng);
            let g = random_graph(&mut rng, 6, d, SigmaChoice::Between);
            g.validate().unwrap();
            let scc = g.coarsest_sigma();
            for c in g.classes() {
                assert!(scc.classes().iter().any(|s| c.is_subset(*s)));
            }
        }
        for _ in 0..100 {
            assert!(random_dag(&mut rng, 6, 0.5, 0.2).is_acyclic());
        }
    }
}
