use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigmasep::discovery::{Encoding, FeatureKind};
use sigmasep::eval::{roc_pr, run_experiment, ExperimentConfig};
use sigmasep::graph::NodeId;
use sigmasep::sim::random_mscm;
use sigmasep::Execution;

/// P(score of a random positive > random negative), ties counted half.
fn mann_whitney(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &a) in scores.iter().enumerate() {
        for (j, &b) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                num += if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 };
            }
        }
    }
    num / pairs
}

#[test]
fn auc_matches_rank_statistic() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let n = rng.random_range(2..200);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        // coarse grid forces ties; small share of infinities
        let scores: Vec<f64> = (0..n)
            .map(|i| match rng.random_range(0..20) {
                0 => f64::INFINITY,
                1 => f64::NEG_INFINITY,
                _ => (rng.random_range(0..8) as f64) + labels[i] as u8 as f64,
            })
            .collect();
        let c = roc_pr(&scores, &labels).unwrap();
        assert!((c.auc - mann_whitney(&scores, &labels)).abs() < 1e-12);
        let rescaled: Vec<f64> = scores.iter().map(|s| (s * 0.3).exp() - 4.0).collect();
        let r = roc_pr(&rescaled, &labels).unwrap();
        assert_eq!(r.auc, c.auc);
        assert_eq!(r.average_precision, c.average_precision);
        for p in &c.points {
            assert!((0.0..=1.0).contains(&p.tpr) && (0.0..=1.0).contains(&p.fpr));
            assert!((0.0..=1.0).contains(&p.precision) && p.recall == p.tpr);
        }
        assert!(c.points.windows(2).all(|w| w[0].threshold > w[1].threshold && w[0].tpr <= w[1].tpr));
    }
}

#[test]
fn average_precision_without_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 300;
    let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let labels: Vec<bool> = scores.iter().map(|&s| rng.random_bool(s)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut hits, mut sum) = (0.0, 0.0);
    for (k, &i) in order.iter().enumerate() {
        if labels[i] {
            hits += 1.0;
            sum += hits / (k + 1) as f64;
        }
    }
    let c = roc_pr(&scores, &labels).unwrap();
    assert!((c.average_precision - sum / hits).abs() < 1e-12);
}

#[test]
fn shuffled_labels_give_chance_auc() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let scores: Vec<f64> = (0..10_000).map(|i| i as f64).collect();
    let mut labels: Vec<bool> = (0..10_000).map(|i| i % 2 == 0).collect();
    labels.shuffle(&mut rng);
    let c = roc_pr(&scores, &labels).unwrap();
    assert!((c.auc - 0.5).abs() < 0.02, "{}", c.auc);
}

#[test]
fn directed_edge_base_rate_matches_p() {
    let (d, p, models) = (4, 0.3, 200);
    let mut edges = 0;
    for seed in 0..models {
        let m = random_mscm(d, 2, p, seed).unwrap();
        let g = m.induced_sigma_cg();
        for a in 0..d {
            for b in 0..d {
                edges += (a != b && g.has_directed(NodeId(a), NodeId(b))) as usize;
            }
        }
    }
    let trials = (models as usize * d * (d - 1)) as f64;
    let sd = (trials * p * (1.0 - p)).sqrt();
    assert!((edges as f64 - trials * p).abs() < 3.0 * sd, "{edges} of {trials}");
}

#[test]
fn two_node_experiment_scores_three_features() {
    let cfg = ExperimentConfig { d: 2, k: 0, n: 1000, replicates: 1, interventions: vec![0], ..Default::default() };
    let r = run_experiment(&cfg, Execution::Parallel).unwrap();
    assert_eq!(r.records.len(), 3);
    let kinds: Vec<FeatureKind> = r.records.iter().map(|x| x.kind).collect();
    assert_eq!(kinds, [FeatureKind::Directed, FeatureKind::Directed, FeatureKind::Bidirected]);
    assert!(!r.records[2].label);
}

#[test]
fn outputs_are_byte_reproducible() {
    let cfg = ExperimentConfig {
        d: 3,
        k: 1,
        n: 1500,
        replicates: 3,
        interventions: vec![0, 2],
        encoding: vec![Encoding::Sigma, Encoding::DAcyclic],
        seed: 5,
        ..Default::default()
    };
    let a = run_experiment(&cfg, Execution::Parallel).unwrap();
    let b = run_experiment(&cfg, Execution::Sequential).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.records.len(), 3 * 2 * 2 * 9);
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    a.write(da.path()).unwrap();
    b.write(db.path()).unwrap();
    for f in ["scores.csv", "curves.csv", "summary.json"] {
        let x = std::fs::read(da.path().join(f)).unwrap();
        assert_eq!(x, std::fs::read(db.path().join(f)).unwrap(), "{f}");
        assert!(!x.is_empty());
    }
    let scores = std::fs::read_to_string(da.path().join("scores.csv")).unwrap();
    assert!(scores.starts_with("model_id,encoding,interventions,kind,from,to,score,label\n"));
    assert_eq!(scores.lines().count(), 1 + a.records.len());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(da.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["cells"].as_array().unwrap().len(), 2 * 2 * 2);
    assert_eq!(summary["replicates_run"], 3);

    let other = run_experiment(&ExperimentConfig { seed: 6, ..cfg }, Execution::Parallel).unwrap();
    assert_ne!(other.records, a.records);
}
