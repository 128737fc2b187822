use super::iss::stronger;
use super::OrderError;
use crate::dsu::DisjointSetForest;
use crate::graph::SimilarityGraph;

/// Vertex-disjoint paths covering all items. Every item starts as a
/// singleton chain; chains grow only by joining two endpoints of different
/// chains, so every chain stays a simple path.
#[derive(Debug, Clone)]
pub struct ChainSet {
    links: Vec<[Option<usize>; 2]>,
    members: DisjointSetForest,
}

impl ChainSet {
    pub fn new(n: usize) -> Self {
        Self {
            links: vec![[None, None]; n],
            members: DisjointSetForest::new(n),
        }
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn chain_count(&self) -> usize {
        self.members.components()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.links[v].iter().flatten().count()
    }

    /// An item with both neighbors assigned; it can never gain an edge.
    pub fn is_internal(&self, v: usize) -> bool {
        self.degree(v) == 2
    }

    pub fn is_endpoint(&self, v: usize) -> bool {
        !self.is_internal(v)
    }

    /// Representative of the chain containing `v`.
    pub fn chain_id(&self, v: usize) -> usize {
        self.members.root(v)
    }

    pub fn same_chain(&self, a: usize, b: usize) -> bool {
        self.members.root(a) == self.members.root(b)
    }

    /// The neighbor one step inward from endpoint `v`, if its chain has more
    /// than one item.
    pub fn inward(&self, v: usize) -> Option<usize> {
        match self.links[v] {
            [Some(x), None] | [None, Some(x)] => Some(x),
            _ => None,
        }
    }

    /// Neighbors of `v` inside its chain.
    pub fn links(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.links[v].iter().flatten().copied()
    }

    /// Both items are endpoints of different chains.
    pub fn can_join(&self, a: usize, b: usize) -> bool {
        a != b && self.is_endpoint(a) && self.is_endpoint(b) && !self.same_chain(a, b)
    }

    /// Links endpoints `a` and `b`. Panics if that would give an item a third
    /// neighbor or close a cycle.
    pub fn join(&mut self, a: usize, b: usize) {
        assert!(self.can_join(a, b), "illegal join {a}-{b}");
        for (x, y) in [(a, b), (b, a)] {
            let slot = self.links[x].iter_mut().find(|s| s.is_none()).expect("free slot");
            *slot = Some(y);
        }
        self.members.union(a, b);
    }

    /// The chains as item sequences, each read from its smaller endpoint,
    /// ordered by that endpoint.
    pub fn chains(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] || self.is_internal(start) {
                continue;
            }
            let mut seq = Vec::new();
            let (mut prev, mut cur) = (None, Some(start));
            while let Some(x) = cur {
                seen[x] = true;
                seq.push(x);
                let next = self.links(x).find(|&y| Some(y) != prev);
                prev = Some(x);
                cur = next;
            }
            out.push(seq);
        }
        out
    }
}

/// Heaviest edge from `endpoint` to an item it may legally join: an endpoint
/// of a different chain. Ties go to the smaller id.
pub fn endpoint_best(
    chains: &ChainSet,
    g: &SimilarityGraph,
    endpoint: usize,
) -> Result<Option<(usize, f64)>, OrderError> {
    if !chains.is_endpoint(endpoint) {
        return Err(OrderError::NotAnEndpoint(endpoint));
    }
    Ok(g.neighbors(endpoint)
        .iter()
        .filter(|nb| chains.can_join(endpoint, nb.id))
        .map(|nb| (nb.id, nb.weight))
        .min_by(|&a, &b| stronger(a, b)))
}
