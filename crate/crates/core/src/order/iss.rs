use std::cmp::Ordering;
use std::collections::BTreeSet;

use super::OrderError;
use crate::graph::{edge_key, SimilarityGraph};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopEntry {
    pub id: usize,
    pub weight: f64,
}

/// Stronger-first ordering of candidate partners of one vertex: heavier
/// weight wins, equal weights go to the smaller id.
pub(crate) fn stronger(a: (usize, f64), b: (usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Top-2 similarity graph with hubs marked.
#[derive(Debug, Clone, PartialEq)]
pub struct IssGraph {
    top2: Vec<Option<(TopEntry, Option<TopEntry>)>>,
    edges: Vec<(usize, usize)>,
    degree: Vec<usize>,
    hubs: Vec<usize>,
}

impl IssGraph {
    /// Builds the graph from explicit per-vertex top-2 lists. A vertex with
    /// `None` has no candidates.
    pub fn from_top2(top2: Vec<Option<(TopEntry, Option<TopEntry>)>>) -> Self {
        let n = top2.len();
        let mut set = BTreeSet::new();
        for (i, t) in top2.iter().enumerate() {
            if let Some((a, b)) = t {
                set.insert(edge_key(i, a.id));
                if let Some(b) = b {
                    set.insert(edge_key(i, b.id));
                }
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut degree = vec![0; n];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let hubs = (0..n).filter(|&v| degree[v] > 2).collect();
        Self {
            top2,
            edges,
            degree,
            hubs,
        }
    }

    pub fn len(&self) -> usize {
        self.top2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.top2.is_empty()
    }

    pub fn top2(&self, v: usize) -> Option<(TopEntry, Option<TopEntry>)> {
        self.top2[v]
    }

    /// Whether `j` is among the two strongest partners of `i`.
    pub fn lists(&self, i: usize, j: usize) -> bool {
        match self.top2[i] {
            Some((a, b)) => a.id == j || b.is_some_and(|b| b.id == j),
            None => false,
        }
    }

    /// Undirected edges derived from the top-2 lists, ascending by key.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Degree in the derived graph, hubs included.
    pub fn degree(&self, v: usize) -> usize {
        self.degree[v]
    }

    pub fn hubs(&self) -> &[usize] {
        &self.hubs
    }

    pub fn is_hub(&self, v: usize) -> bool {
        self.degree[v] > 2
    }

    /// Edges with neither endpoint a hub.
    pub fn working_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .copied()
            .filter(|&(u, v)| !self.is_hub(u) && !self.is_hub(v))
    }
}

/// Keeps the two strongest neighbors of every vertex.
pub fn build_iss(g: &SimilarityGraph) -> Result<IssGraph, OrderError> {
    if g.len() == 1 {
        return Ok(IssGraph::from_top2(vec![None]));
    }
    let mut top2 = Vec::with_capacity(g.len());
    for v in 0..g.len() {
        let mut best: Option<(usize, f64)> = None;
        let mut second: Option<(usize, f64)> = None;
        for nb in g.neighbors(v) {
            let cand = (nb.id, nb.weight);
            if best.is_none_or(|b| stronger(cand, b).is_lt()) {
                second = best;
                best = Some(cand);
            } else if second.is_none_or(|s| stronger(cand, s).is_lt()) {
                second = Some(cand);
            }
        }
        let Some(best) = best else {
            return Err(OrderError::IsolatedVertex(v));
        };
        let entry = |(id, weight)| TopEntry { id, weight };
        top2.push(Some((entry(best), second.map(entry))));
    }
    Ok(IssGraph::from_top2(top2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn keeps_two_strongest() {
        let g = SimilarityGraph::from_edges(4, [(0, 1, 3.0), (0, 2, 2.0), (0, 3, 1.0)]);
        let iss = build_iss(&g).unwrap();
        let (a, b) = iss.top2(0).unwrap();
        assert_eq!((a.id, a.weight), (1, 3.0));
        assert_eq!(b.map(|b| b.id), Some(2));
        assert_eq!(iss.top2(3).unwrap().1, None);
        assert!(iss.lists(0, 2) && !iss.lists(0, 3));
    }

    #[test]
    fn star_center_is_hub() {
        let g = SimilarityGraph::from_edges(6, (1..6).map(|i| (0, i, i as f64)));
        let iss = build_iss(&g).unwrap();
        assert_eq!(iss.hubs(), &[0]);
        assert_eq!(iss.degree(0), 5);
        assert_eq!(iss.working_edges().count(), 0);
    }

    #[test]
    fn isolated_vertex_is_an_error() {
        let g = SimilarityGraph::from_edges(3, [(0, 1, 1.0)]);
        assert_eq!(build_iss(&g), Err(OrderError::IsolatedVertex(2)));
    }

    #[test]
    fn ties_prefer_smaller_ids() {
        let g = SimilarityGraph::from_edges(4, [(0, 3, 1.0), (0, 2, 1.0), (0, 1, 1.0)]);
        let (a, b) = build_iss(&g).unwrap().top2(0).unwrap();
        assert_eq!((a.id, b.unwrap().id), (1, 2));
    }

    #[test]
    fn matches_exhaustive_top2() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let n = 15;
            let mut g = SimilarityGraph::new(n);
            for u in 0..n {
                g.add_edge(u, (u + 1) % n, rng.gen_range(0..5) as f64);
                for v in u + 2..n {
                    if rng.gen_bool(0.3) {
                        g.add_edge(u, v, rng.gen_range(0..5) as f64);
                    }
                }
            }
            let iss = build_iss(&g).unwrap();
            let mut edge_bound = 0;
            for v in 0..n {
                // Exhaustive scan: a candidate is in the top 2 iff fewer than
                // two others beat it.
                let cands: Vec<(usize, f64)> = (0..n)
                    .filter_map(|u| g.weight(v, u).map(|w| (u, w)))
                    .collect();
                let rank_of = |c: (usize, f64)| cands.iter().filter(|&&o| stronger(o, c).is_lt()).count();
                let mut expected: Vec<usize> = cands.iter().filter(|&&c| rank_of(c) < 2).map(|c| c.0).collect();
                expected.sort_by_key(|&u| rank_of((u, g.weight(v, u).unwrap())));
                let (a, b) = iss.top2(v).unwrap();
                let got: Vec<usize> = std::iter::once(a.id).chain(b.map(|b| b.id)).collect();
                assert_eq!(got, expected);
                edge_bound += got.len();
            }
            assert!(iss.edges().len() <= edge_bound);
            assert!(iss.edges().len() <= 2 * n);
            for v in 0..n {
                if !iss.is_hub(v) {
                    assert!(iss.degree(v) <= 2);
                }
            }
        }
    }
}
