use std::collections::VecDeque;

use super::{ceil_log2, ConstructError, PipelineConfig, QuerySession};
use crate::graph::{double_sweep, SimilarityGraph};
use crate::ledger::Phase;
use crate::oracle::Oracle;

#[derive(Debug, Clone, PartialEq)]
pub struct CondenseRound {
    pub bound_before: usize,
    pub bound_after: usize,
    pub new_landmarks: Vec<usize>,
    pub added_edges: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CondenseTrace {
    /// Double-sweep bound of the input graph.
    pub initial_bound: usize,
    pub rounds: Vec<CondenseRound>,
    /// All landmarks, in selection order.
    pub landmarks: Vec<usize>,
}

impl CondenseTrace {
    pub fn final_bound(&self) -> usize {
        self.rounds.last().map_or(self.initial_bound, |r| r.bound_after)
    }
}

/// Farthest-point condensation.
///
/// The landmark set starts from the two double-sweep endpoints. Each round
/// adds up to `ceil(log2 N)` further landmarks, each the vertex farthest from
/// all landmarks chosen so far, and every new landmark probes all other
/// items so that its whole oracle-positive neighborhood enters the graph.
/// The number of rounds defaults to `ceil(log2 b)` where `b` is the
/// double-sweep bound of the input graph.
pub fn condense<O: Oracle + ?Sized>(
    session: &mut QuerySession<'_, O>,
    g: &mut SimilarityGraph,
    cfg: &PipelineConfig,
) -> Result<CondenseTrace, ConstructError> {
    let n = g.len();
    let initial = double_sweep(g, 0)?;
    let rounds = cfg
        .condensation_rounds
        .unwrap_or_else(|| ceil_log2(initial.bound));
    let per_round = cfg.landmarks_per_round.unwrap_or_else(|| ceil_log2(n).max(1));

    let mut trace = CondenseTrace {
        initial_bound: initial.bound,
        rounds: Vec::with_capacity(rounds),
        landmarks: Vec::new(),
    };
    let mut is_landmark = vec![false; n];
    let mut bound = initial.bound;
    let mut sweep = initial;

    for round in 0..rounds {
        let mut new = Vec::new();
        if round == 0 {
            for v in [sweep.endpoint_a, sweep.endpoint_b] {
                if !is_landmark[v] {
                    is_landmark[v] = true;
                    new.push(v);
                }
            }
        }
        let seeds: Vec<usize> = trace.landmarks.iter().chain(&new).copied().collect();
        let mut dist = bfs_usize(g, &seeds);
        for _ in 0..per_round {
            let far = (0..n)
                .filter(|&v| !is_landmark[v])
                .max_by_key(|&v| (dist[v], std::cmp::Reverse(v)));
            let Some(far) = far.filter(|&v| dist[v] > 0) else {
                break;
            };
            is_landmark[far] = true;
            new.push(far);
            relax_from(g, far, &mut dist);
        }

        let mut added = 0;
        for &l in &new {
            for v in 0..n {
                if v == l {
                    continue;
                }
                if let Some(p) = session.probe(l, v, Phase::Condense)? {
                    if p.accepted && g.add_edge(l, v, p.score) {
                        added += 1;
                    }
                }
            }
        }
        trace.landmarks.extend_from_slice(&new);
        sweep = double_sweep(g, 0)?;
        trace.rounds.push(CondenseRound {
            bound_before: bound,
            bound_after: sweep.bound,
            new_landmarks: new,
            added_edges: added,
        });
        bound = sweep.bound;
    }
    Ok(trace)
}

fn bfs_usize(g: &SimilarityGraph, seeds: &[usize]) -> Vec<usize> {
    g.multi_source_bfs(seeds)
        .into_iter()
        .map(|d| d.unwrap_or(usize::MAX))
        .collect()
}

/// Lowers `dist` to account for a new source at `src`.
fn relax_from(g: &SimilarityGraph, src: usize, dist: &mut [usize]) {
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1;
        for nb in g.neighbors(u) {
            if next < dist[nb.id] {
                dist[nb.id] = next;
                queue.push_back(nb.id);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::QueryLedger;
    use crate::oracle::{BinaryOracle, OracleConfig};
    use crate::perm::GroundTruthLine;

    fn identity_oracle(n: usize, c: usize) -> BinaryOracle {
        let truth = GroundTruthLine::from_positions((0..n).map(|i| i as f64).collect()).unwrap();
        BinaryOracle::new(OracleConfig::binary(c, 0), truth)
    }

    #[test]
    fn relax_matches_fresh_bfs() {
        let g = SimilarityGraph::from_edges(8, (1..8).map(|i| (i - 1, i, 1.0)));
        let mut dist = bfs_usize(&g, &[0]);
        relax_from(&g, 7, &mut dist);
        assert_eq!(dist, bfs_usize(&g, &[0, 7]));
    }

    #[test]
    fn one_round_on_a_path() {
        let n = 17;
        let oracle = identity_oracle(n, 2);
        let ledger = QueryLedger::new();
        let mut session = QuerySession::new(&oracle, &ledger, None);
        let mut g = SimilarityGraph::from_edges(n, (1..n).map(|i| (i - 1, i, 1.0)));
        let mut cfg = PipelineConfig::new(n, 2, 0);
        cfg.condensation_rounds = Some(1);
        let trace = condense(&mut session, &mut g, &cfg).unwrap();
        assert_eq!(trace.initial_bound, 16);
        let r = &trace.rounds[0];
        assert!(r.bound_after <= 16usize.div_ceil(2) + 2, "{r:?}");
        assert_eq!(trace.final_bound(), r.bound_after);
        for (u, v, _) in g.edges() {
            assert!(u.abs_diff(v) <= 2);
        }
        assert_eq!(ledger.total(), ledger.count(Phase::Condense));
    }

    #[test]
    fn dense_graph_is_a_fixed_point() {
        let (n, c) = (6, 2);
        let oracle = identity_oracle(n, c);
        let ledger = QueryLedger::new();
        let mut session = QuerySession::new(&oracle, &ledger, None);
        let mut g = SimilarityGraph::new(n);
        for u in 0..n {
            for v in u + 1..=(u + c).min(n - 1) {
                g.add_edge(u, v, 1.0);
            }
        }
        let before = double_sweep(&g, 0).unwrap().bound;
        assert_eq!(before, 3);
        let trace = condense(&mut session, &mut g, &PipelineConfig::new(n, c, 0)).unwrap();
        assert_eq!(trace.final_bound(), before);
        assert!(trace.rounds.iter().all(|r| r.added_edges == 0));
    }

    #[test]
    fn rejects_disconnected_input() {
        let oracle = identity_oracle(4, 1);
        let ledger = QueryLedger::new();
        let mut session = QuerySession::new(&oracle, &ledger, None);
        let mut g = SimilarityGraph::from_edges(4, [(0, 1, 1.0)]);
        assert!(matches!(
            condense(&mut session, &mut g, &PipelineConfig::new(4, 1, 0)),
            Err(ConstructError::DisconnectedGraph { components: 3 })
        ));
    }
}
