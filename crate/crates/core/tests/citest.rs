use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sigmasep::citest::{
    gauss_rank_transform, generate_statements, oracle_statements, partial_correlation_test, read_statements, weight,
    write_statements, Prepared, StatementOptions,
};
use sigmasep::graph::{fixtures as gfix, Backend, NodeId, NodeSet};
use sigmasep::sim::{random_mscm, sample, Dataset};
use sigmasep::Execution;
use statrs::distribution::{ContinuousCDF, Normal};

fn names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("v{i}")).collect()
}

fn gaussian_rows(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect()).collect()
}

#[test]
fn rank_transform_reference_values() {
    let (t, deg) = gauss_rank_transform(&[3.0, 1.0, 2.0]);
    assert!(!deg);
    let q = Normal::standard();
    let want = [q.inverse_cdf(0.75), q.inverse_cdf(0.25), q.inverse_cdf(0.5)];
    for (a, b) in t.iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!((t[0] - 0.6745).abs() < 1e-4);

    // ties share the average rank: ranks 1, 2.5, 2.5, 4
    let (t, _) = gauss_rank_transform(&[0.0, 5.0, 5.0, 9.0]);
    assert_eq!(t[1], t[2]);
    assert!((t[1] - q.inverse_cdf(0.5)).abs() < 1e-12);

    let (t, deg) = gauss_rank_transform(&[2.0; 6]);
    assert!(deg && t.iter().all(|&v| v == 0.0));

    let sorted: Vec<f64> = (0..50).map(|i| i as f64 * 0.3).collect();
    let (t, _) = gauss_rank_transform(&sorted);
    assert!(t.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn rank_transform_ignores_monotone_distortion() {
    let rows = gaussian_rows(3, 500, 1);
    let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let y: Vec<f64> = x.iter().map(|v| (2.0 * v).exp() + v.powi(3)).collect();
    assert_eq!(gauss_rank_transform(&x), gauss_rank_transform(&y));
}

/// Partial correlation of columns 0 and 1 given the rest from regression residuals.
fn residual_partial_correlation(cols: &[Vec<f64>]) -> f64 {
    let n = cols[0].len();
    let k = cols.len() - 2;
    let design = DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { cols[j + 1][i] });
    let resid = |c: &Vec<f64>| {
        let y = DVector::from_column_slice(c);
        let beta = (design.transpose() * &design).try_inverse().unwrap() * design.transpose() * &y;
        y - &design * beta
    };
    let (a, b) = (resid(&cols[0]), resid(&cols[1]));
    a.dot(&b) / (a.norm() * b.norm())
}

#[test]
fn partial_correlation_matches_regression_oracle() {
    let mut rows = gaussian_rows(5, 2000, 4);
    for r in &mut rows {
        r[0] += 0.5 * r[2] - 0.3 * r[3];
        r[1] += 0.7 * r[2] + 0.2 * r[0];
    }
    let ds = Dataset::from_rows(names(4), vec![], &rows).unwrap();
    let prep = Prepared::new(&ds, NodeSet::EMPTY);
    let ranked: Vec<Vec<f64>> = (0..4).map(|j| gauss_rank_transform(&ds.column(j)).0).collect();
    let z: NodeSet = [NodeId(2), NodeId(3)].into_iter().collect();
    let res = partial_correlation_test(&prep, NodeId(0), NodeId(1), z).unwrap();
    let want = residual_partial_correlation(&ranked);
    assert!((res.rho - want).abs() < 1e-10, "{} vs {want}", res.rho);
    let zstat = want.atanh() * ((2000 - 2 - 3) as f64).sqrt();
    let p = 2.0 * (1.0 - Normal::standard().cdf(zstat.abs()));
    assert!((res.p_value - p).abs() < 1e-9 * p.max(1e-300) + 1e-15);
}

#[test]
fn symmetric_and_column_order_invariant() {
    let mut rows = gaussian_rows(6, 1000, 5);
    for r in &mut rows {
        r[1] += r[0] * r[2];
        r[4] += 0.4 * r[3] - 0.2 * r[1];
    }
    let ds = Dataset::from_rows(names(5), vec![], &rows).unwrap();
    let prep = Prepared::new(&ds, NodeSet::EMPTY);
    let perm = [3usize, 0, 4, 2, 1];
    let permuted: Vec<Vec<f64>> = rows.iter().map(|r| perm.iter().map(|&j| r[j]).collect()).collect();
    let pds = Dataset::from_rows(perm.iter().map(|&j| format!("v{}", j + 1)).collect(), vec![], &permuted).unwrap();
    let pprep = Prepared::new(&pds, NodeSet::EMPTY);
    let pos = |j: usize| NodeId(perm.iter().position(|&p| p == j).unwrap());
    for w in 0..5 {
        for y in 0..5 {
            if w == y {
                continue;
            }
            let rest = NodeSet::full(5).without(NodeId(w)).without(NodeId(y));
            for z in rest.subsets() {
                let a = partial_correlation_test(&prep, NodeId(w), NodeId(y), z).unwrap();
                let b = partial_correlation_test(&prep, NodeId(y), NodeId(w), z).unwrap();
                let pz: NodeSet = z.iter().map(|v| pos(v.0)).collect();
                let c = partial_correlation_test(&pprep, pos(w), pos(y), pz).unwrap();
                assert!((a.rho - b.rho).abs() < 1e-12 && (a.rho - c.rho).abs() < 1e-10);
                assert!((a.p_value - c.p_value).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn zero_correlation_gives_p_one() {
    let rows = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 2.0], vec![4.0, 1.0]];
    let ds = Dataset::from_rows(names(2), vec![], &rows).unwrap();
    let r = partial_correlation_test(&Prepared::new(&ds, NodeSet::EMPTY), NodeId(0), NodeId(1), NodeSet::EMPTY).unwrap();
    // symmetric ranks cancel up to quantile rounding
    assert!(r.rho.abs() < 1e-15);
    assert!(r.p_value > 1.0 - 1e-12);
    let mut exact = Prepared::new(&ds, NodeSet::EMPTY);
    exact.corr[(0, 1)] = 0.0;
    exact.corr[(1, 0)] = 0.0;
    assert_eq!(partial_correlation_test(&exact, NodeId(0), NodeId(1), NodeSet::EMPTY).unwrap().p_value, 1.0);

    let short = Dataset::from_rows(names(3), vec![], &rows.iter().map(|r| vec![r[0], r[1], r[0] * r[1]]).collect::<Vec<_>>()).unwrap();
    let z = NodeSet::singleton(NodeId(2));
    assert!(partial_correlation_test(&Prepared::new(&short, NodeSet::EMPTY), NodeId(0), NodeId(1), z).is_err());
}

#[test]
fn independent_columns_are_calibrated() {
    let seeds = 1000;
    let mut rejections = 0;
    let mut ps = Vec::with_capacity(seeds);
    for seed in 0..seeds as u64 {
        let ds = Dataset::from_rows(names(2), vec![], &gaussian_rows(10_000 + seed, 10_000, 2)).unwrap();
        let p = partial_correlation_test(&Prepared::new(&ds, NodeSet::EMPTY), NodeId(0), NodeId(1), NodeSet::EMPTY)
            .unwrap()
            .p_value;
        rejections += (p < 1e-3) as usize;
        ps.push(p);
    }
    // expected 1 rejection; P(Poisson(1) > 6) < 1e-4
    assert!(rejections <= 6, "{rejections}");
    ps.sort_by(f64::total_cmp);
    let ks = ps
        .iter()
        .enumerate()
        .map(|(i, &p)| (p - i as f64 / seeds as f64).abs().max(((i + 1) as f64 / seeds as f64 - p).abs()))
        .fold(0.0, f64::max);
    assert!(ks < 1.63 / (seeds as f64).sqrt(), "KS {ks}");
}

#[test]
fn weight_reference_values() {
    let ln10 = std::f64::consts::LN_10;
    assert_eq!(weight(1e-3, 1e-3), 0.0);
    assert!((weight(1.0, 1e-3) - 3.0 * ln10).abs() < 1e-12);
    assert!((weight(1e-6, 1e-3) + 3.0 * ln10).abs() < 1e-12);
    assert!((weight(0.0, 1e-3) - (1e-300f64.ln() - 1e-3f64.ln())).abs() < 1e-9);
    let mut last = f64::NEG_INFINITY;
    for i in 1..=100 {
        let w = weight(i as f64 / 100.0, 0.05);
        assert!(w > last);
        assert_eq!(w > 0.0, i as f64 / 100.0 > 0.05);
        last = w;
    }
}

#[test]
fn statement_counts_and_ordering() {
    let m = random_mscm(5, 2, 0.3, 8).unwrap();
    let obs = sample(&m, 300, 1, Execution::Parallel).unwrap();
    let int = sample(&m.intervene(NodeSet::singleton(NodeId(2))).unwrap(), 300, 2, Execution::Parallel).unwrap();
    let opts = StatementOptions::default();
    let one = generate_statements(std::slice::from_ref(&obs), &opts, Execution::Parallel).unwrap();
    assert_eq!(one.statements.len(), 80);
    let two = generate_statements(&[obs.clone(), int.clone()], &opts, Execution::Parallel).unwrap();
    assert_eq!(two.statements.len(), 160);
    assert_eq!(two.regimes(), vec![NodeSet::EMPTY, NodeSet::singleton(NodeId(2))]);
    assert_eq!(&two.statements[..80], &one.statements[..]);
    assert!(two.statements[80..].iter().all(|s| s.targets == NodeSet::singleton(NodeId(2))));
    assert_eq!(two, generate_statements(&[obs.clone(), int.clone()], &opts, Execution::Sequential).unwrap());
    for s in &one.statements {
        assert!(s.w < s.y && !s.z.contains(s.w) && !s.z.contains(s.y) && s.lambda.is_finite());
    }

    let excl = StatementOptions { exclude_targets: true, ..opts };
    let e = generate_statements(&[obs.clone(), int.clone()], &excl, Execution::Parallel).unwrap();
    // in the intervened regime only triples avoiding v3 remain: 6 pairs x 4 subsets
    assert_eq!(e.statements.len(), 80 + 24);

    let capped = StatementOptions { max_cond_size: Some(1), ..opts };
    assert_eq!(generate_statements(&[obs.clone()], &capped, Execution::Parallel).unwrap().statements.len(), 10 * 4);

    assert!(generate_statements(&[], &opts, Execution::Parallel).is_err());
    assert!(generate_statements(&[obs.clone(), obs.clone()], &opts, Execution::Parallel).is_err());
    assert!(generate_statements(&[obs], &StatementOptions { alpha: 1.5, ..opts }, Execution::Parallel).is_err());
}

#[test]
fn statements_round_trip_through_csv() {
    let g = gfix::feedback_eight();
    let regimes = [NodeSet::EMPTY, NodeSet::singleton(NodeId(3))];
    let opts = StatementOptions { max_cond_size: Some(2), ..Default::default() };
    let set = oracle_statements(&g.graph, &g.names, &regimes, &opts, Backend::Walk).unwrap();
    assert!(set.statements.iter().all(|s| s.lambda.is_infinite()));
    assert!(set.statements.iter().any(|s| s.lambda > 0.0) && set.statements.iter().any(|s| s.lambda < 0.0));
    let mut buf = Vec::new();
    write_statements(&set, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("w,y,Z,I,lambda,p_value\n") && text.contains(",inf,") && text.contains(",-inf,"));
    let back = read_statements(&buf[..], Some(g.names.clone())).unwrap();
    assert_eq!(back, set);

    let m = random_mscm(3, 1, 0.5, 2).unwrap();
    let ds = sample(&m, 200, 3, Execution::Sequential).unwrap();
    let data = generate_statements(&[ds], &StatementOptions::default(), Execution::Sequential).unwrap();
    let mut buf = Vec::new();
    write_statements(&data, &mut buf).unwrap();
    assert_eq!(read_statements(&buf[..], None).unwrap(), data);

    assert!(read_statements("w,y,Z,I,lambda,p_value\na,a,,,1,\n".as_bytes(), None).is_err());
    assert!(read_statements("w,y,Z,I,lambda,p_value\na,b,,,NaN,\n".as_bytes(), None).is_err());
    assert!(read_statements("a,b\n".as_bytes(), None).is_err());
}
