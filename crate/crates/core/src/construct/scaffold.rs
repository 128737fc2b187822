use std::cmp::Reverse;

use super::{ConstructError, QuerySession};
use crate::graph::{double_sweep, DoubleSweep, SimilarityGraph};
use crate::ledger::Phase;
use crate::oracle::Oracle;
use crate::perm::Permutation;

#[derive(Debug, Clone, PartialEq)]
pub struct ProvisionalOrder {
    pub perm: Permutation,
    pub source_endpoint: usize,
    pub sweep: DoubleSweep,
}

/// Orders items by BFS distance from the first double-sweep endpoint,
/// breaking ties by distance from the second endpoint (descending) and then
/// by id.
pub fn provisional_order(g: &SimilarityGraph) -> Result<ProvisionalOrder, ConstructError> {
    let sweep = double_sweep(g, 0)?;
    let da = g.bfs_distances(sweep.endpoint_a);
    let db = g.bfs_distances(sweep.endpoint_b);
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by_key(|&v| (da[v], Reverse(db[v]), v));
    Ok(ProvisionalOrder {
        perm: Permutation::new(order).expect("sorted ids"),
        source_endpoint: sweep.endpoint_a,
        sweep,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DensifyStats {
    /// Fresh probes issued by this phase.
    pub probed: u64,
    pub added_edges: usize,
    /// Window sweeps performed.
    pub passes: usize,
}

/// Probes every pair within `k` provisional ranks that has not been probed
/// before, adding accepted pairs to `g`.
pub fn densify<O: Oracle + ?Sized>(
    session: &mut QuerySession<'_, O>,
    g: &mut SimilarityGraph,
    order: &ProvisionalOrder,
    k: usize,
) -> Result<DensifyStats, ConstructError> {
    let ord = order.perm.order();
    let mut stats = DensifyStats {
        passes: 1,
        ..Default::default()
    };
    for i in 0..ord.len() {
        for j in i + 1..=(i + k).min(ord.len().saturating_sub(1)) {
            if let Some(p) = session.probe(ord[i], ord[j], Phase::Densify)? {
                stats.probed += 1;
                if p.accepted && g.add_edge(ord[i], ord[j], p.score) {
                    stats.added_edges += 1;
                }
            }
        }
    }
    Ok(stats)
}

/// Repeats [`densify`] on a provisional order recomputed from the densified
/// graph until a sweep adds no edge or `max_passes` sweeps have run. The
/// first order can be off by more than `k` ranks where Borůvka left
/// interleaved strands; every sweep shortens those detours, so later orders
/// are tighter and their windows reach the edges the first one missed.
pub fn densify_until_stable<O: Oracle + ?Sized>(
    session: &mut QuerySession<'_, O>,
    g: &mut SimilarityGraph,
    first: &ProvisionalOrder,
    k: usize,
    max_passes: usize,
) -> Result<DensifyStats, ConstructError> {
    let mut total = densify(session, g, first, k)?;
    while total.passes < max_passes.max(1) && total.added_edges > 0 {
        let order = provisional_order(g)?;
        let s = densify(session, g, &order, k)?;
        total.probed += s.probed;
        total.added_edges += s.added_edges;
        total.passes += 1;
        if s.added_edges == 0 {
            break;
        }
    }
    Ok(total)
}

/// Replaces every edge weight by the Jaccard similarity of the closed
/// neighborhoods of its endpoints. Used when the oracle only answers yes or
/// no: items that share more neighbors are closer on the line.
pub fn jaccard_weights(g: &SimilarityGraph) -> SimilarityGraph {
    let mut out = SimilarityGraph::new(g.len());
    for (u, v, _) in g.edges() {
        let shared = closed_intersection(g, u, v);
        let union = g.degree(u) + 1 + g.degree(v) + 1 - shared;
        out.add_edge(u, v, shared as f64 / union as f64);
    }
    out
}

/// `|N[u] ∩ N[v]|` for closed neighborhoods; both lists are sorted by id.
fn closed_intersection(g: &SimilarityGraph, u: usize, v: usize) -> usize {
    let a = g.neighbors(u);
    let b = g.neighbors(v);
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].id.cmp(&b[j].id) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    // u ∈ N[v] and v ∈ N[u] because {u, v} is an edge.
    count + 2
}
