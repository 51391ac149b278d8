//! Statements compiled against a slot layout: per-regime queries, their
//! penalties, and separation verdicts for graph codes.

use dashmap::DashMap;
use smallvec::SmallVec;

use super::hypothesis::SlotLayout;
use super::{DiscoveryError, Encoding, SolveOptions};
use crate::citest::StatementSet;
use crate::graph::{sigma_reachable, sigma_separated, Backend, NodeId, NodeSet, SeparationQuery, SigmaCG};

/// Bitset over the queries of one regime; bit set = separated.
pub type Verdicts = SmallVec<[u64; 2]>;

const MEMO_LIMIT: usize = 1 << 22;

#[derive(Clone, Debug)]
pub(crate) struct Regime {
    pub targets: NodeSet,
    /// Slots kept by the intervention.
    pub surviving: u64,
    pub queries: Vec<(NodeId, NodeId, NodeSet)>,
    /// Penalty when the query is σ-connected (sum of positive weights).
    pub if_connected: Vec<f64>,
    /// Penalty when the query is σ-separated (sum of |negative weights|).
    pub if_separated: Vec<f64>,
    /// Queries grouped by `(w, Z)` for one reachability search per group.
    groups: Vec<(NodeId, NodeSet, Vec<(NodeId, usize)>)>,
}

/// Compiled loss function.
pub struct Problem {
    pub(crate) layout: SlotLayout,
    pub(crate) regimes: Vec<Regime>,
    pub(crate) encoding: Encoding,
    pub(crate) acyclic: bool,
    backend: Backend,
    memo: Option<DashMap<(u8, u64), Verdicts>>,
}

impl Problem {
    pub fn new(statements: &StatementSet, opts: &SolveOptions) -> Result<Problem, DiscoveryError> {
        let d = statements.nodes.len();
        if d > opts.max_nodes {
            return Err(DiscoveryError::TooManyVariables { d, limit: opts.max_nodes });
        }
        if d > super::hypothesis::MAX_HYPOTHESIS_NODES {
            return Err(DiscoveryError::TooManyVariables { d, limit: super::hypothesis::MAX_HYPOTHESIS_NODES });
        }
        let layout = SlotLayout::new(d);
        let all = NodeSet::full(d);
        let mut regimes: Vec<Regime> = Vec::new();
        for s in &statements.statements {
            let used = s.z.with(s.w).with(s.y) | s.targets;
            if !used.is_subset(all) || s.w == s.y || s.z.contains(s.w) || s.z.contains(s.y) {
                return Err(DiscoveryError::BadStatement(format!("{s:?}")));
            }
            if s.lambda.is_nan() {
                return Err(DiscoveryError::BadStatement("NaN weight".into()));
            }
            let r = match regimes.iter().position(|r| r.targets == s.targets) {
                Some(r) => r,
                None => {
                    regimes.push(Regime {
                        targets: s.targets,
                        surviving: layout.surviving(s.targets),
                        queries: Vec::new(),
                        if_connected: Vec::new(),
                        if_separated: Vec::new(),
                        groups: Vec::new(),
                    });
                    regimes.len() - 1
                }
            };
            let reg = &mut regimes[r];
            let (w, y) = if s.w.0 < s.y.0 { (s.w, s.y) } else { (s.y, s.w) };
            let q = match reg.queries.iter().position(|&(a, b, z)| a == w && b == y && z == s.z) {
                Some(q) => q,
                None => {
                    reg.queries.push((w, y, s.z));
                    reg.if_connected.push(0.0);
                    reg.if_separated.push(0.0);
                    reg.queries.len() - 1
                }
            };
            if s.lambda > 0.0 {
                reg.if_connected[q] += s.lambda;
            } else if s.lambda < 0.0 {
                reg.if_separated[q] += -s.lambda;
            }
        }
        if regimes.len() > u8::MAX as usize {
            return Err(DiscoveryError::BadStatement("too many regimes".into()));
        }
        for reg in &mut regimes {
            for (q, &(w, y, z)) in reg.queries.iter().enumerate() {
                match reg.groups.iter_mut().find(|g| g.0 == w && g.1 == z) {
                    Some(g) => g.2.push((y, q)),
                    None => reg.groups.push((w, z, vec![(y, q)])),
                }
            }
        }
        Ok(Problem {
            layout,
            regimes,
            encoding: opts.encoding,
            acyclic: opts.acyclic || opts.encoding == Encoding::DAcyclic,
            backend: opts.backend,
            memo: if opts.memoize { Some(DashMap::new()) } else { None },
        })
    }

    pub fn layout(&self) -> &SlotLayout {
        &self.layout
    }

    pub fn regime_count(&self) -> usize {
        self.regimes.len()
    }

    pub fn query_count(&self) -> usize {
        self.regimes.iter().map(|r| r.queries.len()).sum()
    }

    fn graph(&self, code: u64) -> SigmaCG {
        let g = self.layout.sigma_cg(code);
        match self.encoding {
            Encoding::Sigma => g,
            Encoding::DCyclic | Encoding::DAcyclic => g.finest_sigma(),
        }
    }

    /// Verdicts of regime `r` on an already intervened graph code.
    pub(crate) fn compute_verdicts(&self, r: usize, code: u64) -> Verdicts {
        let reg = &self.regimes[r];
        let g = self.graph(code);
        let mut out: Verdicts = SmallVec::from_elem(0, reg.queries.len().div_ceil(64).max(1));
        match self.backend {
            Backend::Walk => {
                for (w, z, ys) in &reg.groups {
                    let reach = sigma_reachable(&g, NodeSet::singleton(*w), *z);
                    for &(y, q) in ys {
                        if !reach.contains(y) {
                            out[q / 64] |= 1 << (q % 64);
                        }
                    }
                }
            }
            Backend::Reduction => {
                for (q, &(w, y, z)) in reg.queries.iter().enumerate() {
                    let sep = sigma_separated(&g, &SeparationQuery::pair(w, y, z), Backend::Reduction)
                        .expect("queries lie inside the graph");
                    if sep {
                        out[q / 64] |= 1 << (q % 64);
                    }
                }
            }
        }
        out
    }

    /// Verdicts of regime `r` for hypothesis `code` (intervention applied here).
    pub(crate) fn verdicts(&self, r: usize, code: u64) -> Verdicts {
        let code = code & self.regimes[r].surviving;
        match &self.memo {
            None => self.compute_verdicts(r, code),
            Some(m) => {
                if let Some(v) = m.get(&(r as u8, code)) {
                    return v.clone();
                }
                let v = self.compute_verdicts(r, code);
                if m.len() < MEMO_LIMIT {
                    m.insert((r as u8, code), v.clone());
                }
                v
            }
        }
    }

    /// Loss of regime `r` given its verdicts.
    #[inline]
    pub(crate) fn regime_cost(&self, r: usize, v: &Verdicts) -> f64 {
        let reg = &self.regimes[r];
        let mut s = 0.0;
        for q in 0..reg.queries.len() {
            let sep = v[q / 64] >> (q % 64) & 1 == 1;
            s += if sep { reg.if_separated[q] } else { reg.if_connected[q] };
        }
        s
    }

    /// Lower bound for regime `r` over all graphs between `lo` and `hi`
    /// (verdicts of the sparsest and densest completion): only queries with the
    /// same verdict at both ends contribute. Also reports whether every query
    /// was decided.
    #[inline]
    pub(crate) fn regime_bound(&self, r: usize, lo: &Verdicts, hi: &Verdicts) -> (f64, bool) {
        let reg = &self.regimes[r];
        let mut s = 0.0;
        let mut all = true;
        for q in 0..reg.queries.len() {
            let a = lo[q / 64] >> (q % 64) & 1 == 1;
            let b = hi[q / 64] >> (q % 64) & 1 == 1;
            if a == b {
                s += if a { reg.if_separated[q] } else { reg.if_connected[q] };
            } else {
                all = false;
            }
        }
        (s, all)
    }

    /// Whether `code` is part of the search space.
    #[inline]
    pub fn admissible(&self, code: u64) -> bool {
        !self.acyclic || self.layout.is_acyclic(code)
    }

    /// Total loss of one hypothesis, regimes summed in order.
    pub fn loss(&self, code: u64) -> f64 {
        let mut total = 0.0;
        for r in 0..self.regimes.len() {
            total += self.regime_cost(r, &self.verdicts(r, code));
        }
        total
    }
}
