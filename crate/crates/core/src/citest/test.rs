use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use super::CiError;
use crate::graph::{NodeId, NodeSet};
use crate::sim::Dataset;

/// Smallest p-value used when forming weights.
pub const P_MIN: f64 = 1e-300;
const RHO_CLAMP: f64 = 1e-15;

/// Replace each value by `Φ⁻¹(r / (n + 1))`, `r` its average rank. Returns the
/// transformed column and whether it was constant (then all zeros).
pub fn gauss_rank_transform(column: &[f64]) -> (Vec<f64>, bool) {
    let n = column.len();
    if n == 0 {
        return (Vec::new(), true);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| column[a].total_cmp(&column[b]));
    if column[order[0]] == column[order[n - 1]] {
        return (vec![0.0; n], true);
    }
    let normal = Normal::standard();
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && column[order[j + 1]] == column[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        let q = normal.inverse_cdf(rank / (n as f64 + 1.0));
        for &k in &order[i..=j] {
            out[k] = q;
        }
        i = j + 1;
    }
    (out, false)
}

/// One regime's data after the rank transform, reduced to its correlation matrix.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub targets: NodeSet,
    pub n: usize,
    pub corr: DMatrix<f64>,
    /// Columns that were constant.
    pub degenerate: NodeSet,
}

impl Prepared {
    /// Rank-transform every column and form the correlation matrix. Constant
    /// columns are treated as uncorrelated with everything.
    pub fn new(data: &Dataset, targets: NodeSet) -> Prepared {
        let d = data.d();
        let n = data.n();
        let mut degenerate = NodeSet::EMPTY;
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|j| {
                let (c, deg) = gauss_rank_transform(&data.column(j));
                if deg {
                    degenerate.insert(NodeId(j));
                }
                c
            })
            .collect();
        let mut corr = DMatrix::identity(d, d);
        let centred: Vec<Vec<f64>> = cols
            .iter()
            .map(|c| {
                let mean = c.iter().sum::<f64>() / n.max(1) as f64;
                c.iter().map(|v| v - mean).collect()
            })
            .collect();
        let norms: Vec<f64> = centred.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
        for a in 0..d {
            for b in a + 1..d {
                if norms[a] > 0.0 && norms[b] > 0.0 {
                    let dot: f64 = centred[a].iter().zip(&centred[b]).map(|(x, y)| x * y).sum();
                    let r = dot / (norms[a] * norms[b]);
                    corr[(a, b)] = r;
                    corr[(b, a)] = r;
                }
            }
        }
        Prepared { targets, n, corr, degenerate }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CiResult {
    pub rho: f64,
    pub p_value: f64,
    /// A constant column was involved or the correlation submatrix was singular.
    pub degenerate: bool,
}

/// Partial correlation of `w` and `y` given `z` with a Fisher-z p-value.
pub fn partial_correlation_test(data: &Prepared, w: NodeId, y: NodeId, z: NodeSet) -> Result<CiResult, CiError> {
    let k = z.len();
    if data.n < k + 4 {
        return Err(CiError::InsufficientSamples { have: data.n, need: k + 4, cond: k });
    }
    let idx: Vec<usize> = [w.0, y.0].into_iter().chain(z.iter().map(|v| v.0)).collect();
    let degenerate = idx.iter().any(|&i| data.degenerate.contains(NodeId(i)));
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| data.corr[(idx[a], idx[b])]);
    let rho = if k == 0 {
        sub[(0, 1)]
    } else {
        match sub.try_inverse() {
            Some(p) => -p[(0, 1)] / (p[(0, 0)] * p[(1, 1)]).sqrt(),
            None => return Ok(CiResult { rho: 0.0, p_value: 1.0, degenerate: true }),
        }
    };
    if !rho.is_finite() {
        return Ok(CiResult { rho: 0.0, p_value: 1.0, degenerate: true });
    }
    let r = rho.clamp(-1.0 + RHO_CLAMP, 1.0 - RHO_CLAMP);
    let stat = r.atanh() * ((data.n - k - 3) as f64).sqrt();
    let p_value = erfc(stat.abs() / std::f64::consts::SQRT_2).min(1.0);
    Ok(CiResult { rho, p_value, degenerate })
}

/// `ln p − ln α` with `p` clamped to `[P_MIN, 1]`.
pub fn weight(p_value: f64, alpha: f64) -> f64 {
    p_value.clamp(P_MIN, 1.0).ln() - alpha.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_transform_small_cases() {
        let (t, deg) = gauss_rank_transform(&[3.0, 1.0, 2.0]);
        assert!(!deg);
        assert!((t[0] - 0.674489750196).abs() < 1e-9);
        assert!((t[1] + 0.674489750196).abs() < 1e-9);
        assert!(t[2].abs() < 1e-12);
        let (t, deg) = gauss_rank_transform(&[2.0; 5]);
        assert!(deg);
        assert_eq!(t, vec![0.0; 5]);
        let (t, _) = gauss_rank_transform(&[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(t[1], t[2]);
        assert!(t[0] < t[1] && t[2] < t[3]);
    }

    #[test]
    fn weight_boundaries() {
        assert_eq!(weight(1e-3, 1e-3), 0.0);
        assert!((weight(1.0, 1e-3) - 3.0 * 10f64.ln()).abs() < 1e-12);
        assert!((weight(1e-6, 1e-3) + 3.0 * 10f64.ln()).abs() < 1e-12);
        assert_eq!(weight(0.0, 0.5), P_MIN.ln() - 0.5f64.ln());
    }

    #[test]
    fn zero_correlation_gives_p_one() {
        let data = Prepared { targets: NodeSet::EMPTY, n: 100, corr: DMatrix::identity(3, 3), degenerate: NodeSet::EMPTY };
        let r = partial_correlation_test(&data, NodeId(0), NodeId(1), NodeSet::singleton(NodeId(2))).unwrap();
        assert_eq!(r.rho, 0.0);
        assert_eq!(r.p_value, 1.0);
        let small = Prepared { n: 4, ..data };
        assert!(partial_correlation_test(&small, NodeId(0), NodeId(1), NodeSet::singleton(NodeId(2))).is_err());
    }
}
