//! Sparse undirected similarity graphs and unweighted traversal.
//!
//! Items are dense ids `0..n`. Adjacency lists are kept sorted by neighbor id,
//! so every traversal visits neighbors in ascending id order and is fully
//! deterministic.

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph is disconnected ({components} components)")]
    DisconnectedGraph { components: usize },
    #[error("graph has no vertices")]
    Empty,
}

/// One entry of an adjacency list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub weight: f64,
}

/// Weighted undirected graph without self-loops or parallel edges.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimilarityGraph {
    adj: Vec<Vec<Neighbor>>,
    edge_count: usize,
}

/// Canonical key of an unordered pair.
#[inline]
pub fn edge_key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl SimilarityGraph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut g = Self::new(n);
        for (u, v, w) in edges {
            g.add_edge(u, v, w);
        }
        g
    }

    /// Number of items.
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Inserts `{u, v}` with weight `w`. Returns `false` (and keeps the stored
    /// weight) when the pair is already present.
    ///
    /// Panics on self-loops and out-of-range ids.
    pub fn add_edge(&mut self, u: usize, v: usize, w: f64) -> bool {
        assert!(u != v, "self-loop on item {u}");
        assert!(u < self.len() && v < self.len(), "item out of range");
        match self.adj[u].binary_search_by_key(&v, |nb| nb.id) {
            Ok(_) => false,
            Err(pos) => {
                self.adj[u].insert(pos, Neighbor { id: v, weight: w });
                let pos = self.adj[v]
                    .binary_search_by_key(&u, |nb| nb.id)
                    .unwrap_err();
                self.adj[v].insert(pos, Neighbor { id: u, weight: w });
                self.edge_count += 1;
                true
            }
        }
    }

    /// Overwrites the weight of an existing edge. Returns `false` if absent.
    pub fn set_weight(&mut self, u: usize, v: usize, w: f64) -> bool {
        let Ok(i) = self.adj[u].binary_search_by_key(&v, |nb| nb.id) else {
            return false;
        };
        self.adj[u][i].weight = w;
        let j = self.adj[v].binary_search_by_key(&u, |nb| nb.id).unwrap();
        self.adj[v][j].weight = w;
        true
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.adj
            .get(u)?
            .binary_search_by_key(&v, |nb| nb.id)
            .ok()
            .map(|i| self.adj[u][i].weight)
    }

    pub fn contains_edge(&self, u: usize, v: usize) -> bool {
        self.weight(u, v).is_some()
    }

    pub fn neighbors(&self, u: usize) -> &[Neighbor] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    /// All edges as `(u, v, w)` with `u < v`, in ascending key order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, nbs)| {
            nbs.iter()
                .filter(move |nb| nb.id > u)
                .map(move |nb| (u, nb.id, nb.weight))
        })
    }

    /// Unweighted BFS distances from `src`; `None` marks unreachable items.
    pub fn bfs_distances(&self, src: usize) -> Vec<Option<usize>> {
        self.multi_source_bfs(&[src])
    }

    pub fn multi_source_bfs(&self, sources: &[usize]) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for nb in &self.adj[u] {
                if dist[nb.id].is_none() {
                    dist[nb.id] = Some(du + 1);
                    queue.push_back(nb.id);
                }
            }
        }
        dist
    }

    /// Connected components, each sorted ascending, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for s in 0..self.len() {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut i = 0;
            while i < comp.len() {
                let u = comp[i];
                i += 1;
                for nb in &self.adj[u] {
                    if !seen[nb.id] {
                        seen[nb.id] = true;
                        comp.push(nb.id);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.len() <= 1 || self.bfs_distances(0).iter().all(Option::is_some)
    }
}

/// Length of a shortest unweighted path, or `None` when `v` is unreachable.
pub fn graph_distance(g: &SimilarityGraph, u: usize, v: usize) -> Option<usize> {
    if u == v {
        return Some(0);
    }
    let mut dist = vec![usize::MAX; g.len()];
    let mut queue = VecDeque::from([u]);
    dist[u] = 0;
    while let Some(x) = queue.pop_front() {
        for nb in g.neighbors(x) {
            if dist[nb.id] == usize::MAX {
                dist[nb.id] = dist[x] + 1;
                if nb.id == v {
                    return Some(dist[nb.id]);
                }
                queue.push_back(nb.id);
            }
        }
    }
    None
}

/// Result of two successive farthest-vertex searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DoubleSweep {
    pub endpoint_a: usize,
    pub endpoint_b: usize,
    /// `dist(endpoint_a, endpoint_b)`, a lower bound on the diameter.
    pub bound: usize,
}

/// Farthest item from `dist` (smallest id among ties).
fn farthest(dist: &[Option<usize>]) -> (usize, usize) {
    let mut best = (0, 0);
    for (v, d) in dist.iter().enumerate() {
        let d = d.expect("connected");
        if d > best.1 {
            best = (v, d);
        }
    }
    best
}

pub fn double_sweep(g: &SimilarityGraph, start: usize) -> Result<DoubleSweep, GraphError> {
    if g.is_empty() {
        return Err(GraphError::Empty);
    }
    let d0 = g.bfs_distances(start);
    if d0.iter().any(Option::is_none) {
        return Err(GraphError::DisconnectedGraph {
            components: g.components().len(),
        });
    }
    let (a, _) = farthest(&d0);
    let (b, bound) = farthest(&g.bfs_distances(a));
    Ok(DoubleSweep {
        endpoint_a: a,
        endpoint_b: b,
        bound,
    })
}
