use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::baselines::{fiedler_order, naive_mst_order, DenseSimilarity};
use crate::graph::SimilarityGraph;
use crate::order::{superchain, IssGraph, TopEntry};
use crate::perm::Permutation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub n: usize,
    pub p_grid: Vec<f64>,
    pub trials: usize,
    pub false_candidate_radius: usize,
    pub seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            n: 12,
            p_grid: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            trials: 5000,
            false_candidate_radius: 4,
            seed: 0,
        }
    }
}

impl MonteCarloConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |msg: &str| Err(EvalError::InvalidConfig(msg.to_string()));
        if self.n < 4 || !self.n.is_multiple_of(2) {
            return bad("n must be even and at least 4");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.false_candidate_radius < 2 {
            return bad("false_candidate_radius must be at least 2");
        }
        if self.p_grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("p values must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    SuperChain,
    Fiedler,
    NaiveMst,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::SuperChain, Method::Fiedler, Method::NaiveMst];

    pub fn label(self) -> &'static str {
        match self {
            Self::SuperChain => "superchain",
            Self::Fiedler => "fiedler",
            Self::NaiveMst => "mst",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.label().eq_ignore_ascii_case(s))
    }
}

/// One worst-case fragmentation instance: top-1 partners pair up ranks
/// `(0,1), (2,3), ...`, and second-best choices are either the other true
/// neighbor or a nearby false candidate.
#[derive(Debug, Clone)]
pub struct FragmentationInstance {
    pub truth: Permutation,
    /// Per item: (top-1 partner, second-best choice).
    pub choices: Vec<(usize, usize)>,
    /// Which items received their true second neighbor.
    pub correct: Vec<bool>,
}

impl FragmentationInstance {
    /// Votes summed over both directions: 2 for a top-1 choice, 1 for a
    /// second-best choice.
    pub fn vote_graph(&self) -> SimilarityGraph {
        let mut g = SimilarityGraph::new(self.truth.len());
        for (v, &(a, b)) in self.choices.iter().enumerate() {
            for (u, w) in [(a, 2.0), (b, 1.0)] {
                let cur = g.weight(v, u).unwrap_or(0.0);
                if !g.add_edge(v, u, w) {
                    g.set_weight(v, u, cur + w);
                }
            }
        }
        g
    }

    pub fn iss(&self) -> IssGraph {
        let top2 = self
            .choices
            .iter()
            .map(|&(a, b)| {
                Some((
                    TopEntry { id: a, weight: 2.0 },
                    Some(TopEntry { id: b, weight: 1.0 }),
                ))
            })
            .collect();
        IssGraph::from_top2(top2)
    }
}

/// Samples an instance with `round(p * (n - 2))` internal items holding the
/// correct second-best neighbor. Every other item, endpoints included, gets
/// a false candidate uniform within `radius` ranks, excluding itself and
/// its true neighbors.
pub fn fragmentation_instance(n: usize, p: f64, radius: usize, rng: &mut impl Rng) -> FragmentationInstance {
    let truth = Permutation::random(n, rng);
    let at = |r: usize| truth.order()[r];
    let internal = n - 2;
    let m = (p * internal as f64).round() as usize;
    let mut correct_rank = vec![false; n];
    for i in sample(rng, internal, m.min(internal)) {
        correct_rank[i + 1] = true;
    }
    let mut choices = vec![(0, 0); n];
    let mut correct = vec![false; n];
    for r in 0..n {
        let partner = r ^ 1;
        let second = if correct_rank[r] {
            if r % 2 == 0 {
                r - 1
            } else {
                r + 1
            }
        } else {
            let lo = r.saturating_sub(radius);
            let hi = (r + radius).min(n - 1);
            let cands: Vec<usize> = (lo..=hi).filter(|&s| s.abs_diff(r) > 1).collect();
            cands[rng.gen_range(0..cands.len())]
        };
        choices[at(r)] = (at(partner), at(second));
        correct[at(r)] = correct_rank[r];
    }
    FragmentationInstance { truth, choices, correct }
}

/// Runs `method` on an instance; failures to produce an order count as
/// `None`.
pub fn recover(method: Method, inst: &FragmentationInstance) -> Option<Permutation> {
    let g = inst.vote_graph();
    match method {
        Method::SuperChain => superchain(&inst.iss(), &g).ok().map(|a| a.permutation),
        Method::Fiedler => fiedler_order(&DenseSimilarity::from_graph(&g)).ok(),
        Method::NaiveMst => naive_mst_order(&DenseSimilarity::from_graph(&g)).ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub p: f64,
    pub method: Method,
    pub successes: usize,
    pub trials: usize,
    pub recovery: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// RNG for trial `t` at grid index `pi`; independent of scheduling.
pub fn trial_rng(seed: u64, pi: usize, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((pi as u64) << 32) | t as u64);
    rng
}

/// Recovery probability per `(p, method)`; every method sees the same
/// instances. Rows are ordered by `p` then by the order of `methods`.
pub fn monte_carlo_fragmentation(cfg: &MonteCarloConfig, methods: &[Method]) -> Result<Vec<RecoveryRow>, EvalError> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.p_grid.len() * methods.len());
    for (pi, &p) in cfg.p_grid.iter().enumerate() {
        let hits: Vec<Vec<bool>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(cfg.seed, pi, t);
                let inst = fragmentation_instance(cfg.n, p, cfg.false_candidate_radius, &mut rng);
                methods
                    .iter()
                    .map(|&m| recover(m, &inst).is_some_and(|o| o.matches_up_to_reversal(&inst.truth)))
                    .collect()
            })
            .collect();
        for (mi, &method) in methods.iter().enumerate() {
            let successes = hits.iter().filter(|h| h[mi]).count();
            let (ci_low, ci_high) = wilson_interval(successes, cfg.trials, Z95);
            rows.push(RecoveryRow {
                p,
                method,
                successes,
                trials: cfg.trials,
                recovery: successes as f64 / cfg.trials as f64,
                ci_low,
                ci_high,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for p in [0.0, 0.5, 1.0] {
            let inst = fragmentation_instance(12, p, 4, &mut rng);
            let rank = |v: usize| inst.truth.rank(v);
            assert_eq!(inst.correct.iter().filter(|&&c| c).count(), (p * 10.0).round() as usize);
            for v in 0..12 {
                let (a, b) = inst.choices[v];
                assert_eq!(rank(a), rank(v) ^ 1);
                let d = rank(b).abs_diff(rank(v));
                if inst.correct[v] {
                    assert_eq!(d, 1);
                    assert_ne!(b, a);
                } else {
                    assert!((2..=4).contains(&d));
                }
            }
            let ends = [inst.truth.order()[0], inst.truth.order()[11]];
            assert!(ends.iter().all(|&e| !inst.correct[e]));
        }
    }

    #[test]
    fn vote_graph_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let inst = fragmentation_instance(12, 1.0, 4, &mut rng);
        let g = inst.vote_graph();
        let o = inst.truth.order();
        // Mutual top-1 pairs carry 4; fully correct gaps 2.
        assert_eq!(g.weight(o[0], o[1]), Some(4.0));
        assert_eq!(g.weight(o[5], o[6]), Some(2.0));
        let iss = inst.iss();
        assert!(iss.lists(o[5], o[6]) && iss.lists(o[6], o[5]));
    }

    #[test]
    fn wilson_known_values() {
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
        let (lo, hi) = wilson_interval(0, 10, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.2775).abs() < 1e-4);
        assert_eq!(wilson_interval(10, 10, Z95).1, 1.0);
    }

    #[test]
    fn perfect_second_best_always_recovers() {
        let cfg = MonteCarloConfig {
            p_grid: vec![1.0],
            trials: 300,
            ..Default::default()
        };
        let rows = monte_carlo_fragmentation(&cfg, &[Method::SuperChain]).unwrap();
        assert_eq!(rows[0].successes, 300);
    }

    #[test]
    fn tables_are_deterministic() {
        let cfg = MonteCarloConfig {
            trials: 60,
            seed: 7,
            ..Default::default()
        };
        let a = monte_carlo_fragmentation(&cfg, &Method::ALL).unwrap();
        let b = monte_carlo_fragmentation(&cfg, &Method::ALL).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 18);
        assert!(a.iter().all(|r| r.ci_low <= r.recovery && r.recovery <= r.ci_high));
    }

    #[test]
    fn invalid_configs() {
        let base = MonteCarloConfig::default();
        for cfg in [
            MonteCarloConfig { n: 11, ..base.clone() },
            MonteCarloConfig { trials: 0, ..base.clone() },
            MonteCarloConfig { p_grid: vec![1.5], ..base.clone() },
            MonteCarloConfig { false_candidate_radius: 1, ..base.clone() },
        ] {
            assert!(matches!(cfg.validate(), Err(EvalError::InvalidConfig(_))));
        }
    }

    /// Distinct linear arrangements of `k` oriented two-item blocks, up to
    /// reversal, by explicit enumeration.
    fn enumerate_block_orders(k: usize) -> usize {
        fn perms(items: &mut Vec<usize>, at: usize, out: &mut Vec<Vec<usize>>) {
            if at == items.len() {
                out.push(items.clone());
                return;
            }
            for i in at..items.len() {
                items.swap(at, i);
                perms(items, at + 1, out);
                items.swap(at, i);
            }
        }
        let mut orders = Vec::new();
        perms(&mut (0..k).collect(), 0, &mut orders);
        let mut seen = std::collections::HashSet::new();
        for o in orders {
            for flips in 0..1u32 << k {
                let seq: Vec<usize> = o
                    .iter()
                    .flat_map(|&b| {
                        if flips >> b & 1 == 1 {
                            [2 * b + 1, 2 * b]
                        } else {
                            [2 * b, 2 * b + 1]
                        }
                    })
                    .collect();
                let mut rev = seq.clone();
                rev.reverse();
                seen.insert(seq.min(rev));
            }
        }
        seen.len()
    }

    #[test]
    fn blind_assembly_is_at_chance() {
        let arrangements = enumerate_block_orders(6);
        assert_eq!(arrangements, 23040);
        let chance = 1.0 / arrangements as f64;
        let cfg = MonteCarloConfig {
            p_grid: vec![0.0],
            trials: 100,
            seed: 11,
            ..Default::default()
        };
        for row in monte_carlo_fragmentation(&cfg, &Method::ALL).unwrap() {
            // Expected successes at chance are 100/23040; more than two
            // would be wildly unlikely for a blind assembler.
            assert!(row.successes <= 2, "{:?} recovered {}", row.method, row.successes);
            assert!(row.ci_low <= chance, "{:?}", row.method);
        }
    }
}
