//! End-to-end ordering: the four construction phases followed by SuperChain.

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::construct::{
    boruvka_connect, condense, densify_until_stable, jaccard_weights, provisional_order, ConstructError, CondenseTrace,
    DensifyStats, PipelineConfig, ProvisionalOrder, QuerySession,
};
use crate::graph::{double_sweep, SimilarityGraph};
use crate::ledger::{LedgerSnapshot, QueryLedger};
use crate::oracle::Oracle;
use crate::order::{build_iss, superchain, Assembly, Merge, OrderError};
use crate::perm::Permutation;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error(transparent)]
    Order(#[from] OrderError),
}

/// Result of the assembly stage.
#[derive(Debug, Clone, PartialEq)]
pub enum Ordering {
    Complete(Assembly),
    /// Chains that could not be joined; the reported permutation concatenates
    /// them in the listed order.
    Fragments { fragments: Vec<Vec<usize>>, merges: Vec<Merge> },
}

impl Ordering {
    pub fn is_complete(&self) -> bool {
        matches!(self, Self::Complete(_))
    }

    pub fn fragment_count(&self) -> usize {
        match self {
            Self::Complete(_) => 1,
            Self::Fragments { fragments, .. } => fragments.len(),
        }
    }

    pub fn merges(&self) -> &[Merge] {
        match self {
            Self::Complete(a) => &a.merges,
            Self::Fragments { merges, .. } => merges,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub connect: Duration,
    pub condense: Duration,
    pub densify: Duration,
    /// Weighting, ISS construction and SuperChain.
    pub ordering: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.connect + self.condense + self.densify + self.ordering
    }
}

/// Graph state after one construction phase.
#[derive(Debug, Clone)]
pub struct PhaseSnapshot {
    pub label: &'static str,
    pub graph: SimilarityGraph,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    /// Weighted graph handed to SuperChain.
    pub graph: SimilarityGraph,
    pub boruvka_rounds: usize,
    /// Double-sweep bound of the Phase-1 graph.
    pub tree_bound: usize,
    pub condense: Option<CondenseTrace>,
    /// Double-sweep bound of the graph the provisional order is taken from.
    pub bound_before_ordering: usize,
    pub provisional: ProvisionalOrder,
    pub densify: Option<DensifyStats>,
    pub ordering: Ordering,
    pub permutation: Permutation,
    pub ledger: LedgerSnapshot,
    pub timings: PhaseTimings,
    pub snapshots: Vec<PhaseSnapshot>,
}

/// Runs connectivity, condensation, provisional ordering, densification and
/// SuperChain against `oracle`. Binary oracles get Jaccard edge weights before
/// assembly. An incomplete assembly is not an error: its fragments are
/// concatenated into the reported permutation.
pub fn run_pipeline<O: Oracle + ?Sized>(
    oracle: &O,
    cfg: &PipelineConfig,
    ledger: &QueryLedger,
    keep_snapshots: bool,
) -> Result<PipelineOutcome, PipelineError> {
    let n = oracle.len();
    if n == 0 {
        return Err(ConstructError::TooFewItems { n, min: 1 }.into());
    }
    let mut session = QuerySession::new(oracle, ledger, cfg.query_budget);
    let mut timings = PhaseTimings::default();
    let mut snapshots = Vec::new();
    let mut snap = |label, g: &SimilarityGraph| {
        if keep_snapshots {
            snapshots.push(PhaseSnapshot { label, graph: g.clone() });
        }
    };

    let t = Instant::now();
    let tree = boruvka_connect(&mut session, cfg)?;
    timings.connect = t.elapsed();
    let mut g = tree.graph;
    let tree_bound = double_sweep(&g, 0).map_err(ConstructError::from)?.bound;
    snap("connect", &g);

    let t = Instant::now();
    let trace = if cfg.skip_condensation {
        None
    } else {
        Some(condense(&mut session, &mut g, cfg)?)
    };
    timings.condense = t.elapsed();
    if trace.is_some() {
        snap("condense", &g);
    }

    let t = Instant::now();
    let provisional = provisional_order(&g)?;
    let bound_before_ordering = provisional.sweep.bound;
    let stats = if cfg.skip_densification {
        None
    } else {
        Some(densify_until_stable(&mut session, &mut g, &provisional, cfg.k, cfg.densify_passes)?)
    };
    timings.densify = t.elapsed();
    if stats.is_some() {
        snap("densify", &g);
    }

    let t = Instant::now();
    let weighted = if oracle.weighted() { g } else { jaccard_weights(&g) };
    let (ordering, permutation) = assemble(&weighted)?;
    timings.ordering = t.elapsed();
    snap("weighted", &weighted);

    Ok(PipelineOutcome {
        graph: weighted,
        boruvka_rounds: tree.rounds,
        tree_bound,
        condense: trace,
        bound_before_ordering,
        provisional,
        densify: stats,
        ordering,
        permutation,
        ledger: ledger.snapshot(),
        timings,
        snapshots,
    })
}

/// ISS construction and SuperChain on an already weighted graph.
pub fn assemble(g: &SimilarityGraph) -> Result<(Ordering, Permutation), OrderError> {
    let iss = build_iss(g)?;
    match superchain(&iss, g) {
        Ok(a) => {
            let p = a.permutation.clone();
            Ok((Ordering::Complete(a), p))
        }
        Err(OrderError::AssemblyIncomplete { fragments, merges }) => {
            let p = concat_fragments(&fragments);
            Ok((Ordering::Fragments { fragments, merges }, p))
        }
        Err(e) => Err(e),
    }
}

pub fn concat_fragments(fragments: &[Vec<usize>]) -> Permutation {
    Permutation::new(fragments.concat()).expect("fragments partition the items")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::Phase;
    use crate::oracle::{BinaryOracle, NoisyOracle, OracleConfig};
    use crate::perm::GroundTruthLine;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn binary_line_is_recovered() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let truth = GroundTruthLine::unit_spaced(200, &mut rng);
            let oracle = BinaryOracle::new(OracleConfig::binary(2, seed), truth.clone());
            let ledger = QueryLedger::new();
            let cfg = PipelineConfig::new(200, 2, seed);
            let out = run_pipeline(&oracle, &cfg, &ledger, false).unwrap();
            assert!(out.ordering.is_complete());
            assert!(out.permutation.matches_up_to_reversal(truth.true_perm()), "seed {seed}");
            assert_eq!(out.ledger.total, ledger.total());
        }
    }

    #[test]
    fn noisy_line_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = GroundTruthLine::unit_spaced(150, &mut rng);
        let oracle = NoisyOracle::new(OracleConfig::noisy(3.0, 0.05, 3).unwrap(), truth.clone());
        let ledger = QueryLedger::new();
        let out = run_pipeline(&oracle, &PipelineConfig::new(150, 3, 3), &ledger, true).unwrap();
        assert!(out.permutation.matches_up_to_reversal(truth.true_perm()));
        let labels: Vec<_> = out.snapshots.iter().map(|s| s.label).collect();
        assert_eq!(labels, ["connect", "condense", "densify", "weighted"]);
    }

    #[test]
    fn skipped_phases_issue_no_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let truth = GroundTruthLine::unit_spaced(60, &mut rng);
        let oracle = BinaryOracle::new(OracleConfig::binary(2, 1), truth);
        let ledger = QueryLedger::new();
        let mut cfg = PipelineConfig::new(60, 2, 1);
        cfg.skip_condensation = true;
        cfg.skip_densification = true;
        let out = run_pipeline(&oracle, &cfg, &ledger, false).unwrap();
        assert!(out.condense.is_none() && out.densify.is_none());
        assert_eq!(ledger.count(Phase::Condense), 0);
        assert_eq!(ledger.count(Phase::Densify), 0);
        assert_eq!(out.bound_before_ordering, out.tree_bound);
        assert_eq!(out.permutation.len(), 60);
    }

    #[test]
    fn single_item() {
        let truth = GroundTruthLine::from_positions(vec![0.0]).unwrap();
        let oracle = BinaryOracle::new(OracleConfig::binary(1, 0), truth);
        let out = run_pipeline(&oracle, &PipelineConfig::new(1, 1, 0), &QueryLedger::new(), false).unwrap();
        assert_eq!(out.permutation.order(), &[0]);
        assert_eq!(out.ledger.total, 0);
    }

    #[test]
    fn fragments_are_concatenated() {
        let g = SimilarityGraph::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]);
        let (ord, p) = assemble(&g).unwrap();
        assert_eq!(ord.fragment_count(), 2);
        assert_eq!(p.order(), &[0, 1, 2, 3]);
    }
}
