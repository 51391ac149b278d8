use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigmasep::citest::{oracle_statements, IndependenceStatement, StatementOptions, StatementSet};
use sigmasep::discovery::{
    feature_confidence, intervened_graph, loss, score_all_features, solve, Encoding, Feature, FeatureKind,
    HypothesisGraph, Problem, SlotLayout, SolveOptions, Strategy,
};
use sigmasep::graph::fixtures::feedback_eight;
use sigmasep::graph::{Backend, NodeId, NodeSet};
use sigmasep::sim::random_mscm;
use sigmasep::Execution;

fn names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("v{i}")).collect()
}

fn stmt(w: usize, y: usize, z: &[usize], t: &[usize], lambda: f64) -> IndependenceStatement {
    IndependenceStatement {
        w: NodeId(w),
        y: NodeId(y),
        z: z.iter().map(|&i| NodeId(i)).collect(),
        targets: t.iter().map(|&i| NodeId(i)).collect(),
        lambda,
        p_value: None,
    }
}

/// Every pairwise triple in each regime with a random finite weight.
fn random_instance(rng: &mut impl Rng, d: usize, regimes: &[NodeSet]) -> StatementSet {
    let mut statements = Vec::new();
    for &t in regimes {
        for w in 0..d {
            for y in w + 1..d {
                let rest = NodeSet::full(d).without(NodeId(w)).without(NodeId(y));
                for z in rest.subsets() {
                    let mut s = stmt(w, y, &[], &[], rng.random_range(-8.0..5.0));
                    s.z = z;
                    s.targets = t;
                    statements.push(s);
                }
            }
        }
    }
    StatementSet { nodes: names(d), statements }
}

fn opts() -> SolveOptions {
    SolveOptions { backend: Backend::Walk, ..SolveOptions::default() }
}

#[test]
fn empty_statements_tie_everywhere() {
    let s = StatementSet { nodes: names(2), statements: vec![] };
    let r = solve(&s, &opts()).unwrap();
    assert_eq!((r.best_loss, r.argmin_count, r.argmin.len()), (0.0, 8, 8));
    let (_, f) = score_all_features(&s, &opts()).unwrap();
    assert_eq!(f.len(), 3);
    assert!(f.iter().all(|c| c.score == 0.0));
}

#[test]
fn single_statement_penalties() {
    let s = StatementSet { nodes: names(2), statements: vec![stmt(0, 1, &[], &[], 5.0)] };
    let mut g = HypothesisGraph::new(2);
    assert_eq!(loss(&g, &s, &opts()).unwrap(), 0.0);
    g.add_directed(NodeId(0), NodeId(1));
    assert_eq!(loss(&g, &s, &opts()).unwrap(), 5.0);
    let r = solve(&s, &opts()).unwrap();
    assert_eq!((r.best_loss, r.argmin_count, r.argmin.clone()), (0.0, 1, vec![0]));
}

#[test]
fn contradictory_hard_statements_are_infeasible() {
    let s = StatementSet {
        nodes: names(2),
        statements: vec![stmt(0, 1, &[], &[], f64::INFINITY), stmt(0, 1, &[], &[], f64::NEG_INFINITY)],
    };
    for strategy in [Strategy::Exhaustive, Strategy::BranchAndBound] {
        let r = solve(&s, &SolveOptions { strategy, ..opts() }).unwrap();
        assert_eq!(r.best_loss, f64::INFINITY);
        assert_eq!(r.argmin_count, 0);
    }
    let (_, f) = score_all_features(&s, &opts()).unwrap();
    assert!(f.iter().all(|c| c.score == 0.0));
}

#[test]
fn intervening_on_the_eight_node_graph() {
    let g = feedback_eight();
    let h = HypothesisGraph::from_sigma_cg(&g.graph).unwrap();
    let v = |s: &str| g.id(s).unwrap();
    let gi = intervened_graph(&h, NodeSet::singleton(v("v4"))).unwrap();
    assert!(!gi.has_directed(v("v3"), v("v4")));
    assert!(!gi.has_bidirected(v("v7"), v("v4")));
    assert!(!gi.has_bidirected(v("v4"), v("v6")));
    assert!(gi.has_directed(v("v4"), v("v5")));
    assert!(gi.has_directed(v("v4"), v("v8")));
    for x in ["v2", "v3", "v4", "v5"] {
        assert_eq!(gi.class_of(v(x)).len(), 1);
    }
    assert_eq!(intervened_graph(&h, NodeSet::EMPTY).unwrap(), g.graph);
    assert_eq!(intervened_graph(&h, NodeSet::full(8)).unwrap().edge_count(), 0);
}

#[test]
fn oracle_loss_of_true_eight_node_graph_is_zero() {
    let g = feedback_eight();
    let h = HypothesisGraph::from_sigma_cg(&g.graph).unwrap();
    let regimes = [NodeSet::EMPTY, NodeSet::singleton(NodeId(3)), NodeSet::singleton(NodeId(6))];
    let s = oracle_statements(&g.graph, &g.names, &regimes, &StatementOptions::default(), Backend::Walk).unwrap();
    assert_eq!(s.statements.len(), 3 * 28 * 64);
    let o = SolveOptions { max_nodes: 8, ..opts() };
    assert_eq!(loss(&h, &s, &o).unwrap(), 0.0);
    // Under d-separation the cycle's dependencies are violated.
    assert_eq!(loss(&h, &s, &SolveOptions { encoding: Encoding::DCyclic, ..o }).unwrap(), f64::INFINITY);
}

#[test]
fn compiled_loss_matches_direct_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let layout = SlotLayout::new(4);
    let regimes = [NodeSet::EMPTY, NodeSet::singleton(NodeId(2)), NodeSet(0b1001)];
    let s = random_instance(&mut rng, 4, &regimes);
    for encoding in [Encoding::Sigma, Encoding::DCyclic] {
        for backend in [Backend::Walk, Backend::Reduction] {
            for memoize in [true, false] {
                let o = SolveOptions { encoding, backend, memoize, ..opts() };
                let p = Problem::new(&s, &o).unwrap();
                for _ in 0..150 {
                    let code = rng.random_range(0..1u64 << 18);
                    let direct = loss(&HypothesisGraph::from_code(&layout, code), &s, &o).unwrap();
                    let compiled = p.loss(code);
                    assert!((direct - compiled).abs() <= 1e-9 * direct.abs().max(1.0), "{direct} {compiled}");
                }
            }
        }
    }
}

#[test]
fn branch_and_bound_equals_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..12 {
        let d = 3 + i % 2;
        let regimes: Vec<NodeSet> = [NodeSet::EMPTY, NodeSet::singleton(NodeId(i % d))][..1 + i % 2].to_vec();
        let s = random_instance(&mut rng, d, &regimes);
        let encoding = [Encoding::Sigma, Encoding::DAcyclic, Encoding::DCyclic][i % 3];
        let base = SolveOptions { encoding, ..opts() };
        let ex = solve(&s, &SolveOptions { strategy: Strategy::Exhaustive, ..base }).unwrap();
        let bb = solve(&s, &SolveOptions { strategy: Strategy::BranchAndBound, ..base }).unwrap();
        assert_eq!(ex, bb, "instance {i}");
        let (_, fe) = score_all_features(&s, &SolveOptions { strategy: Strategy::Exhaustive, ..base }).unwrap();
        let (_, fb) = score_all_features(&s, &SolveOptions { strategy: Strategy::BranchAndBound, ..base }).unwrap();
        assert_eq!(fe, fb, "instance {i}");
    }
}

#[test]
fn scaling_and_additivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = random_instance(&mut rng, 3, &[NodeSet::EMPTY]);
    let b = random_instance(&mut rng, 3, &[NodeSet::singleton(NodeId(1))]);
    let mut doubled = a.clone();
    doubled.statements.iter_mut().for_each(|s| s.lambda *= 2.0);
    let mut both = a.clone();
    both.statements.extend(b.statements.iter().cloned());
    let layout = SlotLayout::new(3);
    for code in 0..1u64 << 9 {
        let g = HypothesisGraph::from_code(&layout, code);
        let la = loss(&g, &a, &opts()).unwrap();
        assert!(la >= 0.0);
        assert_eq!(loss(&g, &doubled, &opts()).unwrap(), 2.0 * la);
        let lab = loss(&g, &both, &opts()).unwrap();
        assert!((lab - la - loss(&g, &b, &opts()).unwrap()).abs() < 1e-9);
    }
    let ra = solve(&a, &opts()).unwrap();
    let rd = solve(&doubled, &opts()).unwrap();
    assert_eq!(ra.argmin, rd.argmin);
    assert_eq!(2.0 * ra.best_loss, rd.best_loss);
    let (_, fa) = score_all_features(&a, &opts()).unwrap();
    let (_, fd) = score_all_features(&doubled, &opts()).unwrap();
    for (x, y) in fa.iter().zip(&fd) {
        assert_eq!(2.0 * x.score, y.score);
    }
    let f = Feature { kind: FeatureKind::Bidirected, from: NodeId(0), to: NodeId(2) };
    let single = feature_confidence(&a, &f, &opts()).unwrap();
    assert_eq!(Some(single), fa.iter().find(|c| c.feature == f).copied());
}

#[test]
fn oracle_inputs_are_sound() {
    let layout = SlotLayout::new(4);
    for seed in 0..3 {
        let m = random_mscm(4, 1, 0.4, seed).unwrap();
        let truth = m.induced_sigma_cg();
        let regimes = [NodeSet::EMPTY, NodeSet::singleton(NodeId(0)), NodeSet::singleton(NodeId(2))];
        let s = oracle_statements(&truth, m.observed(), &regimes, &StatementOptions::default(), Backend::Walk).unwrap();
        let o = SolveOptions { exec: Execution::Parallel, ..opts() };
        let (r, features) = score_all_features(&s, &o).unwrap();
        assert_eq!(r.best_loss, 0.0);
        let code = layout.code_of(&truth);
        assert!(r.argmin.contains(&code));
        for (slot, fc) in features.iter().enumerate() {
            let all_have = r.argmin.iter().all(|g| g >> slot & 1 == 1);
            let none_have = r.argmin.iter().all(|g| g >> slot & 1 == 0);
            let want = if all_have {
                f64::INFINITY
            } else if none_have {
                f64::NEG_INFINITY
            } else {
                0.0
            };
            assert_eq!(fc.score, want, "seed {seed} slot {slot}");
        }
    }
}
