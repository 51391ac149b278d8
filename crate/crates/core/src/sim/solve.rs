//! Fixed points of the mechanism system.

use super::model::Mscm;
use super::SimError;
use crate::graph::{NodeId, NodeSet};

/// Stop once successive iterates differ by less than this in sup-norm.
pub const TOLERANCE: f64 = 1e-12;
/// Iteration cap per block; unreachable for contractive models in practice.
pub const MAX_ITERATIONS: usize = 10_000;

/// Exogenous values for one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Exogenous {
    /// One value per latent.
    pub latent: Vec<f64>,
    /// Private noise per observed node (ignored where disabled).
    pub private: Vec<f64>,
    /// Replacement values, read only for intervention targets.
    pub replacement: Vec<f64>,
}

impl Exogenous {
    /// Standard-normal draws for every slot.
    pub fn draw<R: rand::Rng + ?Sized>(m: &Mscm, rng: &mut R) -> Exogenous {
        use rand_distr::{Distribution, StandardNormal};
        let mut n = || -> f64 { StandardNormal.sample(rng) };
        Exogenous {
            latent: (0..m.k()).map(|_| n()).collect(),
            private: (0..m.d()).map(|_| n()).collect(),
            replacement: (0..m.d()).map(|_| n()).collect(),
        }
    }

    /// The additive term `e_v` of every observed node.
    pub fn additive(&self, m: &Mscm) -> Vec<f64> {
        (0..m.d())
            .map(|v| {
                let own = if m.has_private_noise(v) { self.private[v] } else { 0.0 };
                own + m.latent_parents(v).map(|u| self.latent[u]).sum::<f64>()
            })
            .collect()
    }
}

/// Starting point of the iteration.
#[derive(Clone, Copy, Debug)]
pub enum Init<'a> {
    Zero,
    Given(&'a [f64]),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    pub x: Vec<f64>,
    /// Mechanism evaluations per node summed over blocks (block solver) or
    /// sweeps (global solver).
    pub iterations: usize,
    /// Last sup-norm change between iterates.
    pub residual: f64,
    /// Per-sweep residuals of the global solver; empty for the block solver.
    pub trace: Vec<f64>,
}

/// Precomputed block structure of a model.
#[derive(Clone, Debug)]
pub struct Solver<'m> {
    m: &'m Mscm,
    blocks: Vec<NodeSet>,
}

impl<'m> Solver<'m> {
    pub fn new(m: &'m Mscm) -> Solver<'m> {
        Solver { m, blocks: m.induced_sigma_cg().scc_topological_order() }
    }

    #[inline]
    fn mechanism(&self, v: usize, x: &[f64], e: &[f64]) -> f64 {
        let row = &self.m.weight_rows()[v];
        let s: f64 = self.m.parents(v).iter().map(|p| row[p.0] * x[p.0]).sum();
        (s + self.m.bias(v)).tanh() + e[v]
    }

    /// Solve the strongly connected components one at a time in topological
    /// order. Acyclic parts take one evaluation per node; cyclic blocks use
    /// Jacobi iteration.
    pub fn solve(&self, ex: &Exogenous, init: Init) -> Result<FixedPoint, SimError> {
        let d = self.m.d();
        let e = ex.additive(self.m);
        let targets = self.m.targets();
        let mut x = match init {
            Init::Zero => vec![0.0; d],
            Init::Given(v) => {
                assert_eq!(v.len(), d, "initial vector length");
                v.to_vec()
            }
        };
        for t in targets {
            x[t.0] = ex.replacement[t.0];
        }
        let mut iterations = 0;
        let mut residual: f64 = 0.0;
        let mut next = x.clone();
        for &block in &self.blocks {
            let free = block - targets;
            if free.is_empty() {
                continue;
            }
            if block.len() == 1 {
                let v = free.first().unwrap().0;
                x[v] = self.mechanism(v, &x, &e);
                iterations += 1;
                continue;
            }
            let mut sweeps = 0;
            loop {
                let mut diff: f64 = 0.0;
                for v in free {
                    let y = self.mechanism(v.0, &x, &e);
                    diff = diff.max((y - x[v.0]).abs());
                    next[v.0] = y;
                }
                for v in free {
                    x[v.0] = next[v.0];
                }
                sweeps += 1;
                if diff < TOLERANCE {
                    residual = residual.max(diff);
                    break;
                }
                if sweeps >= MAX_ITERATIONS {
                    return Err(SimError::NoConvergence { residual: diff, iterations: sweeps });
                }
            }
            iterations += sweeps;
        }
        Ok(FixedPoint { x, iterations, residual, trace: Vec::new() })
    }

    /// Plain Jacobi iteration on the whole system, recording the residual of
    /// every sweep.
    pub fn solve_global(&self, ex: &Exogenous, init: Init) -> Result<FixedPoint, SimError> {
        let d = self.m.d();
        let e = ex.additive(self.m);
        let targets = self.m.targets();
        let mut x = match init {
            Init::Zero => vec![0.0; d],
            Init::Given(v) => v.to_vec(),
        };
        for t in targets {
            x[t.0] = ex.replacement[t.0];
        }
        let free: Vec<usize> = (0..d).filter(|&v| !targets.contains(NodeId(v))).collect();
        let mut trace = Vec::new();
        let mut next = x.clone();
        if free.is_empty() {
            return Ok(FixedPoint { x, iterations: 0, residual: 0.0, trace });
        }
        loop {
            let mut diff: f64 = 0.0;
            for &v in &free {
                next[v] = self.mechanism(v, &x, &e);
                diff = diff.max((next[v] - x[v]).abs());
            }
            std::mem::swap(&mut x, &mut next);
            trace.push(diff);
            if diff < TOLERANCE {
                return Ok(FixedPoint { x, iterations: trace.len(), residual: diff, trace });
            }
            if trace.len() >= MAX_ITERATIONS {
                return Err(SimError::NoConvergence { residual: diff, iterations: trace.len() });
            }
        }
    }

    /// Sup-norm violation of the structural equations at `x`.
    pub fn equation_residual(&self, ex: &Exogenous, x: &[f64]) -> f64 {
        let e = ex.additive(self.m);
        let targets = self.m.targets();
        (0..self.m.d())
            .map(|v| {
                let want = if targets.contains(NodeId(v)) { ex.replacement[v] } else { self.mechanism(v, x, &e) };
                (want - x[v]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Solve one sample of `m` with the block solver.
pub fn solve_fixed_point(m: &Mscm, ex: &Exogenous, init: Init) -> Result<FixedPoint, SimError> {
    Solver::new(m).solve(ex, init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{fixtures, random_mscm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn acyclic_models_take_one_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for seed in 0..50 {
            let m = random_mscm(5, 2, 0.3, seed).unwrap();
            if !m.induced_sigma_cg().is_acyclic() {
                continue;
            }
            let ex = Exogenous::draw(&m, &mut rng);
            let fp = solve_fixed_point(&m, &ex, Init::Zero).unwrap();
            assert_eq!(fp.iterations, 5);
            assert_eq!(fp.residual, 0.0);
            assert_eq!(Solver::new(&m).equation_residual(&ex, &fp.x), 0.0);
        }
    }

    #[test]
    fn four_cycle_limit_is_unique() {
        let m = fixtures::four_cycle();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ex = Exogenous::draw(&m, &mut rng);
        let s = Solver::new(&m);
        let a = s.solve(&ex, Init::Zero).unwrap();
        let b = s.solve(&ex, Init::Given(&[5.0, -3.0, 2.0, -7.0])).unwrap();
        let c = s.solve_global(&ex, Init::Given(&[-4.0, 4.0, 1.0, 0.5])).unwrap();
        for i in 0..4 {
            assert!((a.x[i] - b.x[i]).abs() < 1e-9);
            assert!((a.x[i] - c.x[i]).abs() < 1e-9);
        }
        assert!(a.residual < TOLERANCE);
        assert!(s.equation_residual(&ex, &a.x) < 1e-11);
        assert!(c.trace.windows(2).skip(1).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn full_intervention_needs_no_iterations() {
        let m = random_mscm(4, 1, 0.8, 3).unwrap();
        let all = m.intervene(NodeSet::full(4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ex = Exogenous::draw(&all, &mut rng);
        let fp = solve_fixed_point(&all, &ex, Init::Zero).unwrap();
        assert_eq!(fp.iterations, 0);
        assert_eq!(fp.x, ex.replacement);
        assert_eq!(Solver::new(&all).solve_global(&ex, Init::Zero).unwrap().iterations, 0);
    }
}
