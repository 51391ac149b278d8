//! Depth-first branch and bound over edge slots.
//!
//! σ-connection only grows when edges are added, and intervening removes the
//! same slots from every graph. So for a partial assignment the sparsest
//! completion (undecided slots absent) and the densest one (undecided slots
//! present) bracket every verdict: a query with the same verdict at both ends
//! has that verdict in the whole subtree. The sum of those penalties is a lower
//! bound, and when every query is decided it is the exact loss of every graph
//! below.

use std::sync::atomic::{AtomicU64, Ordering};

use super::problem::{Problem, Verdicts};
use super::SolveResult;
use crate::exec::{map_range, Execution};

const SPLIT_DEPTH: usize = 8;

pub(crate) struct Search<'p> {
    p: &'p Problem,
    /// Branching order: directed slots first, so acyclicity is settled before
    /// bidirected slots are branched on.
    order: Vec<usize>,
    forced_mask: u64,
    forced_value: u64,
    /// Keep exact tie counts and the argmin list (prune only on strict excess).
    ties: bool,
    cap: usize,
}

struct Local {
    best: f64,
    count: u64,
    argmin: Vec<u64>,
}

impl<'p> Search<'p> {
    pub fn new(p: &'p Problem, forced_mask: u64, forced_value: u64, ties: bool, cap: usize) -> Search<'p> {
        let all = p.layout.all();
        let order = (0..p.layout.len()).filter(|s| forced_mask >> s & 1 == 0).collect();
        Search { p, order, forced_mask: forced_mask & all, forced_value: forced_value & forced_mask & all, ties, cap }
    }

    pub fn run(&self, exec: Execution) -> SolveResult {
        let shared = AtomicU64::new(f64::INFINITY.to_bits());
        let split = self.order.len().min(SPLIT_DEPTH);
        let locals = map_range(exec, 1usize << split, |prefix| {
            let mut value = self.forced_value;
            let mut decided = self.forced_mask;
            for (i, &s) in self.order[..split].iter().enumerate() {
                decided |= 1 << s;
                if prefix >> i & 1 == 1 {
                    value |= 1 << s;
                }
            }
            let mut local = Local { best: f64::INFINITY, count: 0, argmin: Vec::new() };
            self.visit(split, decided, value, None, &shared, &mut local);
            local
        });
        let best = locals.iter().map(|l| l.best).fold(f64::INFINITY, f64::min);
        let mut count = 0;
        let mut argmin = Vec::new();
        for l in locals.into_iter().filter(|l| l.best == best && l.count > 0) {
            count += l.count;
            for g in l.argmin {
                if argmin.len() < self.cap {
                    argmin.push(g);
                }
            }
        }
        argmin.sort_unstable();
        SolveResult { best_loss: best, argmin_count: count, argmin }
    }

    /// Infinite bounds are always pruned: such graphs are never minimisers.
    fn prune(&self, bound: f64, shared: &AtomicU64, local: &Local) -> bool {
        let best = f64::from_bits(shared.load(Ordering::Relaxed)).min(local.best);
        bound == f64::INFINITY || if self.ties { bound > best } else { bound >= best }
    }

    /// `settled` carries the exact loss once an ancestor decided every query.
    fn visit(
        &self,
        depth: usize,
        decided: u64,
        value: u64,
        settled: Option<f64>,
        shared: &AtomicU64,
        local: &mut Local,
    ) {
        let layout = &self.p.layout;
        let all = layout.all();
        let undecided = all & !decided;
        if self.p.acyclic && !layout.is_acyclic(value) {
            return;
        }
        let mut bound = 0.0;
        let mut exact = true;
        if let Some(loss) = settled {
            bound = loss;
            if self.prune(bound, shared, local) {
                return;
            }
        } else {
            let hi = value | undecided;
            for r in 0..self.p.regimes.len() {
                let lo_v: Verdicts = self.p.verdicts(r, value);
                let (b, all_decided) = if undecided & self.p.regimes[r].surviving == 0 {
                    (self.p.regime_cost(r, &lo_v), true)
                } else {
                    let hi_v = self.p.verdicts(r, hi);
                    self.p.regime_bound(r, &lo_v, &hi_v)
                };
                bound += b;
                exact &= all_decided;
            }
            if self.prune(bound, shared, local) {
                return;
            }
        }
        if exact {
            let directed_open = undecided & layout.directed_mask() != 0;
            if !(self.p.acyclic && directed_open) {
                self.record(bound, undecided, value, shared, local);
                return;
            }
        }
        if depth == self.order.len() {
            // Fully assigned codes are always exact.
            unreachable!("leaf without exact loss");
        }
        let s = self.order[depth];
        let bit = 1u64 << s;
        let next_settled = if exact { Some(bound) } else { None };
        self.visit(depth + 1, decided | bit, value, next_settled, shared, local);
        self.visit(depth + 1, decided | bit, value | bit, next_settled, shared, local);
    }

    /// Every completion of `value` over `free` has loss `loss`.
    fn record(&self, loss: f64, free: u64, value: u64, shared: &AtomicU64, local: &mut Local) {
        let n = 1u64 << free.count_ones();
        if loss < local.best {
            local.best = loss;
            local.count = 0;
            local.argmin.clear();
            shared.fetch_min(loss.to_bits(), Ordering::Relaxed);
        } else if loss > local.best {
            return;
        }
        if !self.ties {
            local.count = 1;
            return;
        }
        local.count += n;
        // Ascending enumeration of subsets of `free` until the cap is reached.
        let mut sub = 0u64;
        while local.argmin.len() < self.cap {
            local.argmin.push(value | sub);
            if sub == free {
                break;
            }
            sub = (sub.wrapping_sub(free)) & free;
        }
    }
}
