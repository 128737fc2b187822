//! Sparse graph construction: random-hook Borůvka connectivity, farthest-point
//! condensation, double-sweep provisional ordering and K-window densification.
//!
//! All phases probe through a shared [`QuerySession`], which charges each
//! distinct pair at most once across the whole run.

mod boruvka;
mod condense;
mod scaffold;

use std::collections::HashSet;

use thiserror::Error;

use crate::graph::{edge_key, GraphError};
use crate::ledger::{Phase, QueryLedger};
use crate::oracle::{Oracle, OracleError, Probe};

pub use boruvka::{boruvka_connect, BoruvkaOutcome};
pub use condense::{condense, CondenseRound, CondenseTrace};
pub use scaffold::{densify, densify_until_stable, jaccard_weights, provisional_order, DensifyStats, ProvisionalOrder};

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error("connectivity stalled with {} components", components.len())]
    ConnectivityStalled { components: Vec<Vec<usize>> },
    #[error("graph is disconnected ({components} components)")]
    DisconnectedGraph { components: usize },
    #[error("query budget of {budget} exhausted during {phase}")]
    BudgetExceeded { budget: u64, phase: Phase },
    #[error("need at least {min} items, got {n}")]
    TooFewItems { n: usize, min: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl From<GraphError> for ConstructError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::DisconnectedGraph { components } => Self::DisconnectedGraph { components },
            GraphError::Empty => Self::TooFewItems { n: 0, min: 1 },
        }
    }
}

/// Knobs of the four construction phases.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Densification window width in provisional ranks.
    pub k: usize,
    /// Ratio `K / c` used when `k` was derived from the radius.
    pub gamma: usize,
    /// Multiplier in `s = ceil(a * log2 N)`.
    pub a: f64,
    /// Fresh probes per component per Borůvka round.
    pub s: usize,
    /// Round cap for Phase 1. The default is large enough that a run ends
    /// by exhausting cross-component pairs rather than by the cap: with at
    /// least two components every round probes at least two fresh pairs.
    pub max_boruvka_rounds: usize,
    /// `None` means `ceil(log2 diam(T))` from the Phase-1 tree.
    pub condensation_rounds: Option<usize>,
    /// `None` means `ceil(log2 N)` new landmarks per round.
    pub landmarks_per_round: Option<usize>,
    pub seed: u64,
    pub skip_condensation: bool,
    pub skip_densification: bool,
    /// Cap on window sweeps; each sweep after the first re-derives the
    /// provisional order from the densified graph.
    pub densify_passes: usize,
    /// Abort with [`ConstructError::BudgetExceeded`] once this many probes
    /// have been charged.
    pub query_budget: Option<u64>,
}

pub const DEFAULT_GAMMA: usize = 4;
pub const DEFAULT_A: f64 = 2.0;
pub const DEFAULT_DENSIFY_PASSES: usize = 8;

impl PipelineConfig {
    /// Defaults for `n` items and radius `c`: `K = 4c`, `s = ceil(2 log2 n)`.
    pub fn new(n: usize, c: usize, seed: u64) -> Self {
        Self {
            k: DEFAULT_GAMMA * c,
            gamma: DEFAULT_GAMMA,
            a: DEFAULT_A,
            s: probes_per_round(DEFAULT_A, n),
            max_boruvka_rounds: n.saturating_mul(n) / 4 + 64,
            condensation_rounds: None,
            landmarks_per_round: None,
            seed,
            skip_condensation: false,
            skip_densification: false,
            densify_passes: DEFAULT_DENSIFY_PASSES,
            query_budget: None,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }
}

/// `max(1, ceil(a * log2 n))`.
pub fn probes_per_round(a: f64, n: usize) -> usize {
    ((a * (n.max(2) as f64).log2()).ceil() as usize).max(1)
}

/// `ceil(log2 x)` for `x >= 1`, zero for `x <= 1`.
pub fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}

const DENSE_LIMIT: usize = 1 << 15;

/// Set of probed pairs: a triangular bitset for moderate `n`, a hash set
/// beyond that.
#[derive(Debug, Clone)]
enum ProbedSet {
    Dense(Vec<u64>),
    Sparse(HashSet<u64>),
}

impl ProbedSet {
    fn new(n: usize) -> Self {
        if n <= DENSE_LIMIT {
            let pairs = n * n.saturating_sub(1) / 2;
            Self::Dense(vec![0; pairs.div_ceil(64)])
        } else {
            Self::Sparse(HashSet::new())
        }
    }

    fn slot(u: usize, v: usize) -> u64 {
        let (a, b) = edge_key(u, v);
        (b * (b - 1) / 2 + a) as u64
    }

    fn contains(&self, u: usize, v: usize) -> bool {
        let k = Self::slot(u, v);
        match self {
            Self::Dense(bits) => bits[(k / 64) as usize] >> (k % 64) & 1 == 1,
            Self::Sparse(set) => set.contains(&k),
        }
    }

    /// Returns `true` if the pair was not yet present.
    fn insert(&mut self, u: usize, v: usize) -> bool {
        let k = Self::slot(u, v);
        match self {
            Self::Dense(bits) => {
                let word = &mut bits[(k / 64) as usize];
                let mask = 1u64 << (k % 64);
                let fresh = *word & mask == 0;
                *word |= mask;
                fresh
            }
            Self::Sparse(set) => set.insert(k),
        }
    }
}

/// Oracle access with global pair deduplication and an optional budget.
pub struct QuerySession<'a, O: Oracle + ?Sized> {
    oracle: &'a O,
    ledger: &'a QueryLedger,
    probed: ProbedSet,
    budget: Option<u64>,
    fresh_probes: u64,
}

impl<'a, O: Oracle + ?Sized> QuerySession<'a, O> {
    pub fn new(oracle: &'a O, ledger: &'a QueryLedger, budget: Option<u64>) -> Self {
        Self {
            oracle,
            ledger,
            probed: ProbedSet::new(oracle.len()),
            budget,
            fresh_probes: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.oracle.len()
    }

    pub fn oracle(&self) -> &O {
        self.oracle
    }

    pub fn ledger(&self) -> &QueryLedger {
        self.ledger
    }

    /// Distinct pairs probed through this session.
    pub fn fresh_probes(&self) -> u64 {
        self.fresh_probes
    }

    pub fn was_probed(&self, u: usize, v: usize) -> bool {
        self.probed.contains(u, v)
    }

    /// Probes `{u, v}` unless it was probed before, in which case nothing is
    /// charged and `None` is returned.
    pub fn probe(&mut self, u: usize, v: usize, phase: Phase) -> Result<Option<Probe>, ConstructError> {
        if u == v {
            return Err(OracleError::SelfQuery(u).into());
        }
        if self.probed.contains(u, v) {
            return Ok(None);
        }
        if let Some(budget) = self.budget {
            if self.ledger.total() >= budget {
                return Err(ConstructError::BudgetExceeded { budget, phase });
            }
        }
        let p = self.oracle.probe(u, v, self.ledger, phase)?;
        self.probed.insert(u, v);
        self.fresh_probes += 1;
        Ok(Some(p))
    }
}
