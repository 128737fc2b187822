use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::iss::IssGraph;
use crate::graph::SimilarityGraph;
use crate::perm::Permutation;

/// Margin of one internal item `v_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ItemMargin {
    pub item: usize,
    /// `w(v_i, v_{i-1})`, absent when that true edge is missing.
    pub left_true_weight: Option<f64>,
    /// Heaviest edge to any item other than the two true neighbors.
    pub rival: Option<(usize, f64)>,
    /// `left_true_weight - A_i`; `+inf` without rivals, `-inf` when the true
    /// edge is missing.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginReport {
    pub per_item: Vec<ItemMargin>,
    /// Minimum margin over internal items (`+inf` when there are none).
    pub global_min: f64,
}

/// Per-item weight gaps `Δ(v_i) = w(v_i, v_{i-1}) - A_i` over internal items
/// and their minimum.
pub fn delta_margin(g: &SimilarityGraph, truth: &Permutation) -> MarginReport {
    let order = truth.order();
    let mut per_item = Vec::new();
    for i in 1..order.len().saturating_sub(1) {
        let (prev, v, next) = (order[i - 1], order[i], order[i + 1]);
        let left = g.weight(v, prev);
        let rival = g
            .neighbors(v)
            .iter()
            .filter(|nb| nb.id != prev && nb.id != next)
            .map(|nb| (nb.id, nb.weight))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        let margin = match (left, rival) {
            (None, _) => f64::NEG_INFINITY,
            (Some(_), None) => f64::INFINITY,
            (Some(l), Some((_, a))) => l - a,
        };
        per_item.push(ItemMargin {
            item: v,
            left_true_weight: left,
            rival,
            margin,
        });
    }
    let global_min = per_item.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min);
    MarginReport { per_item, global_min }
}

/// Random weighted graph whose hidden order satisfies top-1 correctness, a
/// tie-free margin `delta` and endpoint purity.
#[derive(Debug, Clone)]
pub struct MarginInstance {
    pub graph: SimilarityGraph,
    pub truth: Permutation,
    pub delta: f64,
}

/// Builds a [`MarginInstance`] with `n` items and roughly `extra` false edges
/// per item, half of them between near neighbors in the true order.
///
/// True edges weigh `U[0.5, 1]`. A false edge `{u, v}` weighs at most
/// `min(b(u), b(v)) - delta`, where `b(x)` is the lightest true edge at `x`,
/// so the margin holds at every item including both ends. The pair of the
/// two ends is never an edge.
pub fn margin_instance(n: usize, extra: usize, delta: f64, rng: &mut impl Rng) -> MarginInstance {
    assert!(delta > 0.0 && delta < 0.5, "delta must lie in (0, 0.5)");
    let truth = Permutation::random(n, rng);
    let order = truth.order();
    let mut graph = SimilarityGraph::new(n);
    let mut lightest = vec![f64::INFINITY; n];
    for (u, v) in truth.path_pairs() {
        let w = rng.gen_range(0.5..=1.0);
        graph.add_edge(u, v, w);
        lightest[u] = lightest[u].min(w);
        lightest[v] = lightest[v].min(w);
    }
    if n < 3 {
        return MarginInstance { graph, truth, delta };
    }
    let (first, last) = (order[0], order[n - 1]);
    let mut ranks: Vec<usize> = (0..n).collect();
    ranks.shuffle(rng);
    for &r in &ranks {
        let u = order[r];
        for k in 0..extra {
            let s = if k % 2 == 0 {
                let off = rng.gen_range(2..=4usize);
                if rng.gen_bool(0.5) {
                    r.checked_sub(off)
                } else {
                    Some(r + off).filter(|&x| x < n)
                }
            } else {
                Some(rng.gen_range(0..n))
            };
            let Some(s) = s else { continue };
            let v = order[s];
            if s.abs_diff(r) <= 1 || (u == first && v == last) || (u == last && v == first) {
                continue;
            }
            let cap = lightest[u].min(lightest[v]) - delta;
            graph.add_edge(u, v, rng.gen_range(0.0..=cap));
        }
    }
    MarginInstance { graph, truth, delta }
}

/// True adjacent pairs that are not mutual top-1 partners (gaps between
/// top-1 mini-chains) yet rank each other within their top 2.
pub fn fully_supported_gaps(iss: &IssGraph, truth: &Permutation) -> Vec<(usize, usize)> {
    let top1 = |v: usize| iss.top2(v).map(|(a, _)| a.id);
    truth
        .path_pairs()
        .filter(|&(u, v)| !(top1(u) == Some(v) && top1(v) == Some(u)))
        .filter(|&(u, v)| iss.lists(u, v) && iss.lists(v, u))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::{build_iss, TopEntry};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn only_true_edges_gives_infinite_margin() {
        let g = SimilarityGraph::from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]);
        let r = delta_margin(&g, &Permutation::identity(4));
        assert_eq!(r.per_item.len(), 2);
        assert!(r.per_item.iter().all(|m| m.rival.is_none() && m.margin == f64::INFINITY));
        assert_eq!(r.global_min, f64::INFINITY);
    }

    #[test]
    fn missing_true_edge_is_negative_infinity() {
        let g = SimilarityGraph::from_edges(3, [(1, 2, 1.0), (0, 2, 0.3)]);
        let r = delta_margin(&g, &Permutation::identity(3));
        assert_eq!(r.global_min, f64::NEG_INFINITY);
    }

    #[test]
    fn matches_direct_rescan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let n = 12;
            let truth = Permutation::random(n, &mut rng);
            let mut g = SimilarityGraph::new(n);
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(0.4) {
                        g.add_edge(u, v, rng.gen_range(0.0..1.0));
                    }
                }
            }
            let report = delta_margin(&g, &truth);
            let mut expected_min = f64::INFINITY;
            for i in 1..n - 1 {
                let o = truth.order();
                let mut a_i = f64::NEG_INFINITY;
                for u in 0..n {
                    if u != o[i - 1] && u != o[i + 1] && u != o[i] {
                        if let Some(w) = g.weight(o[i], u) {
                            a_i = a_i.max(w);
                        }
                    }
                }
                let d = match g.weight(o[i], o[i - 1]) {
                    None => f64::NEG_INFINITY,
                    Some(_) if a_i == f64::NEG_INFINITY => f64::INFINITY,
                    Some(l) => l - a_i,
                };
                assert_eq!(report.per_item[i - 1].margin, d);
                expected_min = expected_min.min(d);
            }
            assert_eq!(report.global_min, expected_min);
        }
    }

    #[test]
    fn generated_instances_satisfy_assumptions() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in [2, 3, 10, 200] {
            let inst = margin_instance(n, 4, 0.05, &mut rng);
            let o = inst.truth.order();
            for (u, v) in inst.truth.path_pairs() {
                assert!(inst.graph.contains_edge(u, v));
            }
            if n >= 3 {
                assert!(!inst.graph.contains_edge(o[0], o[n - 1]));
            }
            for r in 0..n {
                let v = o[r];
                let true_ws: Vec<f64> = [r.checked_sub(1), Some(r + 1).filter(|&x| x < n)]
                    .into_iter()
                    .flatten()
                    .map(|s| inst.graph.weight(v, o[s]).unwrap())
                    .collect();
                let floor = true_ws.iter().copied().fold(f64::INFINITY, f64::min);
                for nb in inst.graph.neighbors(v) {
                    if inst.truth.rank(nb.id).abs_diff(r) > 1 {
                        assert!(nb.weight + inst.delta <= floor + 1e-12);
                    }
                }
            }
            let max_edge = inst.graph.edges().max_by(|a, b| a.2.total_cmp(&b.2)).unwrap();
            assert_eq!(inst.truth.rank(max_edge.0).abs_diff(inst.truth.rank(max_edge.1)), 1);
            if n > 2 {
                assert!(delta_margin(&inst.graph, &inst.truth).global_min >= inst.delta - 1e-12);
            }
        }
    }

    #[test]
    fn supported_gap_counting() {
        // Truth 0..6, top-1 pairs (0,1),(2,3),(4,5). The gap (1,2) is
        // mutually listed; (3,4) is listed by 3 only.
        let e = |id| TopEntry { id, weight: 1.0 };
        let top2 = vec![
            Some((e(1), Some(e(2)))),
            Some((e(0), Some(e(2)))),
            Some((e(3), Some(e(1)))),
            Some((e(2), Some(e(4)))),
            Some((e(5), Some(e(2)))),
            Some((e(4), Some(e(3)))),
        ];
        let iss = IssGraph::from_top2(top2);
        assert_eq!(fully_supported_gaps(&iss, &Permutation::identity(6)), vec![(1, 2)]);
        let g = SimilarityGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]);
        // Equal weights: 1 picks 0 as top-1, so (1,2) is a supported gap.
        assert_eq!(fully_supported_gaps(&build_iss(&g).unwrap(), &Permutation::identity(3)), vec![(1, 2)]);
    }
}
