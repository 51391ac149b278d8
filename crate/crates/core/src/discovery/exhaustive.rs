//! Full enumeration of the hypothesis space.

use super::problem::Problem;
use super::{DiscoveryError, SolveResult};
use crate::exec::{map_chunks, map_range, Execution};

/// Largest slot count enumerated exhaustively.
pub const MAX_EXHAUSTIVE_SLOTS: usize = 24;
const CHUNK: usize = 4096;

/// Scatter the low bits of `i` into the set bits of `mask`.
#[inline]
fn deposit(mut i: u64, mut mask: u64) -> u64 {
    let mut out = 0;
    while mask != 0 {
        let bit = mask & mask.wrapping_neg();
        if i & 1 == 1 {
            out |= bit;
        }
        i >>= 1;
        mask &= mask - 1;
    }
    out
}

/// Loss of every hypothesis code; `NaN` marks codes outside the search space.
pub struct Landscape {
    pub losses: Vec<f64>,
}

impl Landscape {
    pub fn build(p: &Problem, exec: Execution) -> Result<Landscape, DiscoveryError> {
        let slots = p.layout.len();
        if slots > MAX_EXHAUSTIVE_SLOTS {
            return Err(DiscoveryError::TooLargeForEnumeration { slots });
        }
        let size = 1usize << slots;
        // Intervened graphs repeat across hypotheses, so each regime is costed
        // once per distinct intervened code.
        let mut tables = Vec::with_capacity(p.regimes.len());
        for (r, reg) in p.regimes.iter().enumerate() {
            let allowed = reg.surviving;
            let k = allowed.count_ones();
            let compact = map_chunks(exec, 1usize << k, CHUNK, |range| {
                range
                    .map(|i| {
                        let code = deposit(i as u64, allowed);
                        // Intervened acyclic graphs stay acyclic, so cyclic codes are never read.
                        if p.acyclic && !p.layout.is_acyclic(code) {
                            f64::NAN
                        } else {
                            p.regime_cost(r, &p.compute_verdicts(r, code))
                        }
                    })
                    .collect()
            });
            let mut dense = vec![0.0; size];
            for (i, c) in compact.into_iter().enumerate() {
                dense[deposit(i as u64, allowed) as usize] = c;
            }
            tables.push((allowed, dense));
        }
        let losses = map_chunks(exec, size, CHUNK, |range| {
            range
                .map(|g| {
                    let g = g as u64;
                    if !p.admissible(g) {
                        return f64::NAN;
                    }
                    let mut total = 0.0;
                    for (allowed, t) in &tables {
                        total += t[(g & allowed) as usize];
                    }
                    total
                })
                .collect()
        });
        Ok(Landscape { losses })
    }

    pub fn solve(&self, cap: usize) -> SolveResult {
        let mut best = f64::INFINITY;
        let mut any = false;
        for &l in &self.losses {
            if !l.is_nan() {
                any = true;
                if l < best {
                    best = l;
                }
            }
        }
        let mut count = 0u64;
        let mut argmin = Vec::new();
        if any && best.is_finite() {
            for (g, &l) in self.losses.iter().enumerate() {
                if l == best {
                    count += 1;
                    if argmin.len() < cap {
                        argmin.push(g as u64);
                    }
                }
            }
        }
        SolveResult { best_loss: best, argmin_count: count, argmin }
    }

    /// Minimum loss over admissible codes with slot `s` absent and present.
    pub fn slot_minima(&self, slots: usize, exec: Execution) -> Vec<[f64; 2]> {
        let n = self.losses.len();
        let chunk = 1 << 14;
        let per_chunk = map_range(exec, n.div_ceil(chunk), |c| {
            let range = c * chunk..((c + 1) * chunk).min(n);
            let mut m = vec![[f64::INFINITY; 2]; slots];
            for g in range {
                let l = self.losses[g];
                if l.is_nan() {
                    continue;
                }
                for (s, ms) in m.iter_mut().enumerate() {
                    let b = (g >> s) & 1;
                    if l < ms[b] {
                        ms[b] = l;
                    }
                }
            }
            m
        });
        let mut out = vec![[f64::INFINITY; 2]; slots];
        for m in per_chunk {
            for s in 0..slots {
                for b in 0..2 {
                    out[s][b] = out[s][b].min(m[s][b]);
                }
            }
        }
        out
    }
}
