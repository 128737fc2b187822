use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ConstructError, PipelineConfig, QuerySession};
use crate::dsu::DisjointSetForest;
use crate::graph::SimilarityGraph;
use crate::ledger::Phase;
use crate::oracle::Oracle;

#[derive(Debug, Clone)]
pub struct BoruvkaOutcome {
    /// Connected spanning subgraph made of accepted probes.
    pub graph: SimilarityGraph,
    pub rounds: usize,
}

/// Random-hook Borůvka.
///
/// Each round, every component draws up to `s` fresh candidate pairs
/// `(u, v)` with `u` uniform inside the component and `v` uniform outside it;
/// the first accepted probe becomes that component's hook. Hooks are applied
/// together at the end of the round. When a round yields no fresh probe at
/// all, an exhaustive sweep over unprobed cross pairs runs before declaring
/// a stall.
pub fn boruvka_connect<O: Oracle + ?Sized>(
    session: &mut QuerySession<'_, O>,
    cfg: &PipelineConfig,
) -> Result<BoruvkaOutcome, ConstructError> {
    let n = session.n();
    if n == 0 {
        return Err(ConstructError::TooFewItems { n, min: 1 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut graph = SimilarityGraph::new(n);
    let mut dsu = DisjointSetForest::new(n);
    let s = cfg.s.max(1);
    let mut rounds = 0;

    while dsu.components() > 1 {
        if rounds >= cfg.max_boruvka_rounds {
            return Err(ConstructError::ConnectivityStalled {
                components: dsu.groups(),
            });
        }
        rounds += 1;
        let groups = dsu.groups();
        let mut hooks = Vec::new();
        let mut fresh = 0usize;

        for comp in &groups {
            let root = dsu.root(comp[0]);
            let mut probes = 0;
            for _ in 0..8 * s {
                if probes == s {
                    break;
                }
                let u = comp[rng.gen_range(0..comp.len())];
                let v = rng.gen_range(0..n);
                if dsu.root(v) == root {
                    continue;
                }
                let Some(p) = session.probe(u, v, Phase::Connect)? else {
                    continue;
                };
                probes += 1;
                if p.accepted {
                    hooks.push((u, v, p.score));
                    break;
                }
            }
            fresh += probes;
        }

        if fresh == 0 {
            hooks = sweep(session, &dsu, &groups)?;
            if hooks.is_empty() {
                return Err(ConstructError::ConnectivityStalled { components: groups });
            }
        }
        for (u, v, w) in hooks {
            graph.add_edge(u, v, w);
            dsu.union(u, v);
        }
    }
    Ok(BoruvkaOutcome { graph, rounds })
}

/// Probes unprobed cross-component pairs in key order until each component
/// finds a hook. Returns no hooks only when every cross pair has been probed
/// and rejected.
fn sweep<O: Oracle + ?Sized>(
    session: &mut QuerySession<'_, O>,
    dsu: &DisjointSetForest,
    groups: &[Vec<usize>],
) -> Result<Vec<(usize, usize, f64)>, ConstructError> {
    let n = session.n();
    let mut hooks = Vec::new();
    for comp in groups {
        let root = dsu.root(comp[0]);
        'comp: for &u in comp {
            for v in 0..n {
                if dsu.root(v) == root {
                    continue;
                }
                if let Some(p) = session.probe(u, v, Phase::Connect)? {
                    if p.accepted {
                        hooks.push((u, v, p.score));
                        break 'comp;
                    }
                }
            }
        }
    }
    Ok(hooks)
}
