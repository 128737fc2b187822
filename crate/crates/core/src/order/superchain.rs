use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use serde::Serialize;

use super::chains::ChainSet;
use super::iss::{stronger, IssGraph};
use super::OrderError;
use crate::graph::{edge_key, SimilarityGraph};
use crate::perm::Permutation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Reciprocal top-2 pairs extracted by depth-first traversal.
    MiniChains,
    /// Max-heap over the hub-free ISS edges.
    IssHeap,
    /// Endpoint-driven heap over every edge of the sparse graph.
    Endpoints,
    /// Joins supported by edges of vertices one step inward.
    Fallback,
}

/// One join of two chain endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    /// Edge weight, or the summed inward support for fallback joins.
    pub weight: f64,
    pub stage: Stage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assembly {
    /// Canonically oriented order (`order[0] < order[n-1]`).
    pub permutation: Permutation,
    pub iterations: usize,
    pub merges: Vec<Merge>,
    /// Candidate edges examined across all stages.
    pub inspections: u64,
    pub hubs: usize,
}

/// Heap entry ordered by weight, then by smaller edge key.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    weight: f64,
    a: usize,
    b: usize,
}

impl Candidate {
    fn rank(&self) -> (f64, Reverse<(usize, usize)>) {
        (self.weight, Reverse(edge_key(self.a, self.b)))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        let (wa, ka) = self.rank();
        let (wb, kb) = other.rank();
        wa.total_cmp(&wb).then(ka.cmp(&kb))
    }
}

struct Assembler<'a> {
    iss: &'a IssGraph,
    g: &'a SimilarityGraph,
    chains: ChainSet,
    merges: Vec<Merge>,
    inspections: u64,
}

impl Assembler<'_> {
    fn weight(&self, u: usize, v: usize) -> f64 {
        self.g.weight(u, v).unwrap_or_else(|| {
            let listed = |i: usize, j: usize| {
                self.iss.top2(i).and_then(|(a, b)| {
                    if a.id == j {
                        Some(a.weight)
                    } else {
                        b.filter(|b| b.id == j).map(|b| b.weight)
                    }
                })
            };
            listed(u, v).or_else(|| listed(v, u)).unwrap_or(f64::NEG_INFINITY)
        })
    }

    fn join(&mut self, a: usize, b: usize, weight: f64, stage: Stage) {
        self.chains.join(a, b);
        self.merges.push(Merge { a, b, weight, stage });
    }

    /// Stage 1: mini-chains from reciprocal top-2 pairs among non-hubs. Each
    /// component of that degree-2 graph is walked depth-first; a cycle is
    /// opened at its weakest edge first.
    fn mini_chains(&mut self) {
        let n = self.chains.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (u, v) in self.iss.working_edges() {
            if self.iss.lists(u, v) && self.iss.lists(v, u) {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        let mut seen = vec![false; n];
        for s in 0..n {
            if seen[s] || adj[s].is_empty() {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(x) = stack.pop() {
                comp.push(x);
                for &y in &adj[x] {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            let mut edges: Vec<(usize, usize)> = comp
                .iter()
                .flat_map(|&x| adj[x].iter().filter(move |&&y| x < y).map(move |&y| (x, y)))
                .collect();
            self.inspections += edges.len() as u64;
            if edges.len() == comp.len() {
                let weakest = *edges
                    .iter()
                    .max_by(|&&(a, b), &&(c, d)| {
                        stronger((0, self.weight(a, b)), (0, self.weight(c, d)))
                            .then(edge_key(a, b).cmp(&edge_key(c, d)))
                    })
                    .expect("cycle has edges");
                edges.retain(|&e| e != weakest);
                let (a, b) = weakest;
                adj[a].retain(|&y| y != b);
                adj[b].retain(|&y| y != a);
            }
            let start = comp
                .iter()
                .copied()
                .filter(|&x| adj[x].len() <= 1)
                .min()
                .expect("path has an end");
            let (mut prev, mut cur) = (usize::MAX, start);
            while let Some(&next) = adj[cur].iter().find(|&&y| y != prev) {
                let w = self.weight(cur, next);
                self.join(cur, next, w, Stage::MiniChains);
                prev = cur;
                cur = next;
            }
        }
    }

    /// Stage 2: global max-heap over hub-free ISS edges.
    fn iss_heap(&mut self) {
        let mut heap: BinaryHeap<Candidate> = self
            .iss
            .working_edges()
            .map(|(a, b)| Candidate {
                weight: self.weight(a, b),
                a,
                b,
            })
            .collect();
        while let Some(c) = heap.pop() {
            self.inspections += 1;
            if self.chains.can_join(c.a, c.b) {
                self.join(c.a, c.b, c.weight, Stage::IssHeap);
            }
        }
    }

    /// Stage 3: every endpoint offers its heaviest joinable edge of `g`; the
    /// heaviest offer overall is applied first. Offers are refreshed lazily
    /// through per-vertex cursors, and a pair that stops being joinable never
    /// becomes joinable again, so each adjacency entry is skipped once.
    fn endpoints(&mut self) {
        let n = self.chains.len();
        let sorted: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|v| {
                let mut adj: Vec<(usize, f64)> = self.g.neighbors(v).iter().map(|nb| (nb.id, nb.weight)).collect();
                adj.sort_by(|&x, &y| stronger(x, y));
                adj
            })
            .collect();
        let mut cursor = vec![0usize; n];
        let mut heap = BinaryHeap::new();

        let offer = |v: usize, cursor: &mut [usize], chains: &ChainSet, inspections: &mut u64| {
            while let Some(&(u, w)) = sorted[v].get(cursor[v]) {
                *inspections += 1;
                if chains.can_join(v, u) {
                    return Some(Candidate { weight: w, a: v, b: u });
                }
                cursor[v] += 1;
            }
            None
        };

        for v in 0..n {
            if self.chains.is_endpoint(v) {
                if let Some(c) = offer(v, &mut cursor, &self.chains, &mut self.inspections) {
                    heap.push(c);
                }
            }
        }
        while let Some(c) = heap.pop() {
            self.inspections += 1;
            if self.chains.can_join(c.a, c.b) {
                self.join(c.a, c.b, c.weight, Stage::Endpoints);
            }
            if self.chains.is_endpoint(c.a) {
                if let Some(next) = offer(c.a, &mut cursor, &self.chains, &mut self.inspections) {
                    heap.push(next);
                }
            }
        }
    }

    /// Stage 4: for endpoint pairs with no direct edge, sum the weights of
    /// edges between `{a, inward(a)}` and `{b, inward(b)}` and join the best
    /// supported pairs. Repeats until a pass makes no join.
    fn fallback(&mut self) {
        loop {
            let n = self.chains.len();
            // Endpoints whose group {a, inward(a)} contains each vertex.
            let mut groups_of: Vec<Vec<usize>> = vec![Vec::new(); n];
            for a in 0..n {
                if self.chains.is_endpoint(a) && self.chains.chain_count() > 1 {
                    groups_of[a].push(a);
                    if let Some(x) = self.chains.inward(a) {
                        groups_of[x].push(a);
                    }
                }
            }
            let mut support: BTreeMap<(usize, usize), f64> = BTreeMap::new();
            for x in 0..n {
                if groups_of[x].is_empty() {
                    continue;
                }
                for nb in self.g.neighbors(x) {
                    if nb.id < x {
                        continue;
                    }
                    for &a in &groups_of[x] {
                        for &b in &groups_of[nb.id] {
                            self.inspections += 1;
                            if self.chains.can_join(a, b) {
                                *support.entry(edge_key(a, b)).or_insert(0.0) += nb.weight;
                            }
                        }
                    }
                }
            }
            let mut cands: Vec<Candidate> = support
                .into_iter()
                .filter(|&(_, s)| s > 0.0)
                .map(|((a, b), s)| Candidate { weight: s, a, b })
                .collect();
            cands.sort_by(|x, y| y.cmp(x));

            // A join changes the inward vertex of a singleton endpoint, so
            // chains touched in this pass wait for the next one.
            let mut dirty = vec![false; n];
            let mut progressed = false;
            for c in cands {
                let (ca, cb) = (self.chains.chain_id(c.a), self.chains.chain_id(c.b));
                if dirty[ca] || dirty[cb] || !self.chains.can_join(c.a, c.b) {
                    continue;
                }
                self.join(c.a, c.b, c.weight, Stage::Fallback);
                dirty[ca] = true;
                dirty[cb] = true;
                dirty[self.chains.chain_id(c.a)] = true;
                progressed = true;
            }
            if !progressed {
                return;
            }
        }
    }
}

/// Greedy endpoint-merging assembly in four stages: reciprocal mini-chains,
/// an ISS max-heap, an endpoint-driven heap over the full sparse graph (with
/// hubs re-entering as singletons), and the inward-vertex fallback.
///
/// Every join links endpoints of two different chains, so no item ever
/// gains a third neighbor and every chain remains a simple path.
pub fn superchain(iss: &IssGraph, g: &SimilarityGraph) -> Result<Assembly, OrderError> {
    let n = g.len();
    if n == 0 {
        return Err(OrderError::Empty);
    }
    let mut asm = Assembler {
        iss,
        g,
        chains: ChainSet::new(n),
        merges: Vec::with_capacity(n.saturating_sub(1)),
        inspections: 0,
    };
    asm.mini_chains();
    asm.iss_heap();
    asm.endpoints();
    asm.fallback();

    let mut chains = asm.chains.chains();
    if chains.len() > 1 {
        return Err(OrderError::AssemblyIncomplete {
            fragments: chains,
            merges: asm.merges,
        });
    }
    let order = chains.pop().expect("one chain");
    Ok(Assembly {
        permutation: Permutation::new(order).expect("chain covers all items").canonical(),
        iterations: asm.merges.len(),
        merges: asm.merges,
        inspections: asm.inspections,
        hubs: iss.hubs().len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::{build_iss, margin_instance, IssGraph, TopEntry};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn run(g: &SimilarityGraph) -> Result<Assembly, OrderError> {
        superchain(&build_iss(g)?, g)
    }

    #[test]
    fn four_item_path() {
        let g = SimilarityGraph::from_edges(
            4,
            [(2, 0, 0.9), (0, 3, 0.8), (3, 1, 0.7), (2, 3, 0.2), (0, 1, 0.1)],
        );
        let a = run(&g).unwrap();
        assert_eq!(a.permutation.order(), &[1, 3, 0, 2]);
        assert_eq!(a.iterations, 3);
    }

    #[test]
    fn single_item() {
        let a = run(&SimilarityGraph::new(1)).unwrap();
        assert_eq!(a.permutation.order(), &[0]);
        assert_eq!(a.iterations, 0);
        assert_eq!(run(&SimilarityGraph::new(0)), Err(OrderError::Empty));
    }

    #[test]
    fn cycle_opens_at_weakest_edge() {
        let g = SimilarityGraph::from_edges(3, [(0, 1, 3.0), (1, 2, 2.0), (0, 2, 1.0)]);
        let a = run(&g).unwrap();
        assert_eq!(a.permutation.order(), &[0, 1, 2]);
        assert!(a.merges.iter().all(|m| m.stage == Stage::MiniChains));
    }

    #[test]
    fn disconnected_input_is_incomplete() {
        let g = SimilarityGraph::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]);
        match run(&g) {
            Err(OrderError::AssemblyIncomplete { fragments, merges }) => {
                assert_eq!(fragments, vec![vec![0, 1], vec![2, 3]]);
                assert_eq!(merges.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    /// Worst-case fragmentation with every second-best edge correct: the
    /// top-1 partners pair up as [0,1],[2,3],...,[10,11].
    #[test]
    fn six_mini_chains_with_perfect_second_best() {
        let n = 12;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = Permutation::random(n, &mut rng);
        let at = |r: usize| truth.order()[r];
        let mut top2 = vec![None; n];
        let mut g = SimilarityGraph::new(n);
        for r in 0..n {
            let partner = r ^ 1;
            let other = if r % 2 == 0 { r.checked_sub(1) } else { Some(r + 1).filter(|&x| x < n) };
            let second = other.map(|o| TopEntry { id: at(o), weight: 1.0 });
            let second = second.or_else(|| Some(TopEntry { id: at(if r == 0 { 2 } else { n - 3 }), weight: 1.0 }));
            top2[at(r)] = Some((TopEntry { id: at(partner), weight: 2.0 }, second));
        }
        for (v, t) in top2.iter().enumerate() {
            let (a, b) = t.unwrap();
            for e in [Some(a), b].into_iter().flatten() {
                let cur = g.weight(v, e.id).unwrap_or(0.0);
                if cur == 0.0 {
                    g.add_edge(v, e.id, 0.0);
                }
                g.set_weight(v, e.id, cur + e.weight);
            }
        }
        let iss = IssGraph::from_top2(top2);
        let a = superchain(&iss, &g).unwrap();
        assert!(a.permutation.matches_up_to_reversal(&truth));
        assert_eq!(a.iterations, n - 1);
    }

    #[test]
    fn margin_instances_recover_exactly() {
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inst = margin_instance(200, 3, 0.05, &mut rng);
            let a = run(&inst.graph).unwrap();
            assert!(a.permutation.matches_up_to_reversal(&inst.truth), "seed {seed}");
            assert_eq!(a.iterations, 199);
            // Each adjacency entry is examined a bounded number of times.
            assert!(a.inspections <= 8 * (inst.graph.edge_count() as u64 + 200), "seed {seed}");
        }
    }

    #[test]
    fn merges_keep_chains_contiguous_under_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let inst = margin_instance(300, 4, 0.05, &mut rng);
        let a = run(&inst.graph).unwrap();
        let mut replay = ChainSet::new(300);
        for m in &a.merges {
            replay.join(m.a, m.b);
            assert_eq!(inst.truth.rank(m.a).abs_diff(inst.truth.rank(m.b)), 1);
            for chain in replay.chains() {
                let mut ranks: Vec<usize> = chain.iter().map(|&v| inst.truth.rank(v)).collect();
                let monotone = ranks.windows(2).all(|w| w[0] < w[1]) || ranks.windows(2).all(|w| w[0] > w[1]);
                ranks.sort_unstable();
                assert!(monotone && ranks.windows(2).all(|w| w[1] == w[0] + 1));
            }
        }
    }
}
