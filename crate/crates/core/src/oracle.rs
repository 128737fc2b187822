//! Pairwise-comparison oracles.
//!
//! Three backends share the [`Oracle`] trait: an exact binary proximity
//! oracle, a bounded relative-noise distance oracle with threshold
//! acceptance, and a lookup into precomputed similarity scores. Every probe
//! is charged to a [`QueryLedger`].

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{edge_key, SimilarityGraph};
use crate::ledger::{Phase, QueryLedger};
use crate::perm::GroundTruthLine;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("self-query on item {0}")]
    SelfQuery(usize),
    #[error("item {item} out of range for {n} items")]
    OutOfRange { item: usize, n: usize },
    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Oracle radii and thresholds. Construct through [`OracleConfig::noisy`] or
/// [`OracleConfig::binary`] so that `c = ceil(rho)` and
/// `delta = (1 - epsilon) * rho` always hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub c: usize,
    pub rho: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
}

impl OracleConfig {
    pub fn noisy(rho: f64, epsilon: f64, seed: u64) -> Result<Self, OracleError> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(OracleError::InvalidConfig(format!("rho must be positive, got {rho}")));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(OracleError::InvalidConfig(format!(
                "epsilon must lie in [0, 1), got {epsilon}"
            )));
        }
        Ok(Self {
            c: rho.ceil() as usize,
            rho,
            epsilon,
            delta: (1.0 - epsilon) * rho,
            seed,
        })
    }

    pub fn binary(c: usize, seed: u64) -> Self {
        assert!(c >= 1, "radius must be positive");
        Self::noisy(c as f64, 0.0, seed).expect("valid radius")
    }
}

/// Per-pair perturbations `eta_uv ~ U[-epsilon * d, +epsilon * d]`.
///
/// Each draw is a pure function of `(seed, pair)`, so repeated queries of the
/// same pair see the same value without any shared mutable cache.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseDraw {
    pub epsilon: f64,
    pub seed: u64,
}

impl NoiseDraw {
    pub fn new(epsilon: f64, seed: u64) -> Self {
        Self { epsilon, seed }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0)
    }

    /// Perturbation for the pair at true distance `d`.
    pub fn eta(&self, u: usize, v: usize, d: f64) -> f64 {
        if self.epsilon == 0.0 || d == 0.0 {
            return 0.0;
        }
        let (a, b) = edge_key(u, v);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((a as u64) << 32) | b as u64);
        self.epsilon * d * rng.gen_range(-1.0..=1.0)
    }
}

fn check_pair(u: usize, v: usize, n: usize) -> Result<(), OracleError> {
    if u == v {
        return Err(OracleError::SelfQuery(u));
    }
    for item in [u, v] {
        if item >= n {
            return Err(OracleError::OutOfRange { item, n });
        }
    }
    Ok(())
}

/// `|v_u - v_v| <= c`. Charged to [`Phase::Lookup`].
pub fn binary_query(
    cfg: &OracleConfig,
    truth: &GroundTruthLine,
    ledger: &QueryLedger,
    u: usize,
    v: usize,
) -> Result<bool, OracleError> {
    check_pair(u, v, truth.len())?;
    ledger.record(Phase::Lookup);
    Ok(truth.distance(u, v) <= cfg.c as f64)
}

/// Observed distance `|v_u - v_v| + eta_uv`. Charged to [`Phase::Lookup`].
pub fn noisy_query(
    truth: &GroundTruthLine,
    noise: &NoiseDraw,
    ledger: &QueryLedger,
    u: usize,
    v: usize,
) -> Result<f64, OracleError> {
    check_pair(u, v, truth.len())?;
    ledger.record(Phase::Lookup);
    Ok(observed_distance(truth, noise, u, v))
}

fn observed_distance(truth: &GroundTruthLine, noise: &NoiseDraw, u: usize, v: usize) -> f64 {
    let d = truth.distance(u, v);
    d + noise.eta(u, v, d)
}

/// Inclusive threshold test `observed <= delta`.
pub fn accept_edge(cfg: &OracleConfig, observed: f64) -> bool {
    observed <= cfg.delta
}

/// Stored score or `None`. Charged to [`Phase::Lookup`].
pub fn matrix_query(
    store: &SimilarityMatrixStore,
    ledger: &QueryLedger,
    u: usize,
    v: usize,
) -> Result<Option<f64>, OracleError> {
    check_pair(u, v, store.len())?;
    ledger.record(Phase::Lookup);
    Ok(store.score(u, v))
}

/// `M_uv = SSIM * #inliers`.
pub fn combine_similarity(ssim: f64, inliers: u64) -> f64 {
    ssim * inliers as f64
}

/// Outcome of one probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub accepted: bool,
    /// Edge weight to use if accepted; larger means more similar.
    pub score: f64,
}

pub trait Oracle: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Queries one pair and charges one unit to `phase`.
    fn probe(
        &self,
        u: usize,
        v: usize,
        ledger: &QueryLedger,
        phase: Phase,
    ) -> Result<Probe, OracleError>;

    /// Whether probe scores carry graded similarity. Binary oracles return
    /// `false`, and the pipeline derives weights from graph structure.
    fn weighted(&self) -> bool;

    /// Proximity radius in index space, when known.
    fn radius(&self) -> Option<usize> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct BinaryOracle {
    pub cfg: OracleConfig,
    pub truth: GroundTruthLine,
}

impl BinaryOracle {
    pub fn new(cfg: OracleConfig, truth: GroundTruthLine) -> Self {
        Self { cfg, truth }
    }
}

impl Oracle for BinaryOracle {
    fn len(&self) -> usize {
        self.truth.len()
    }

    fn probe(&self, u: usize, v: usize, ledger: &QueryLedger, phase: Phase) -> Result<Probe, OracleError> {
        check_pair(u, v, self.len())?;
        ledger.record(phase);
        Ok(Probe {
            accepted: self.truth.distance(u, v) <= self.cfg.c as f64,
            score: 1.0,
        })
    }

    fn weighted(&self) -> bool {
        false
    }

    fn radius(&self) -> Option<usize> {
        Some(self.cfg.c)
    }
}

#[derive(Debug, Clone)]
pub struct NoisyOracle {
    pub cfg: OracleConfig,
    pub truth: GroundTruthLine,
    pub noise: NoiseDraw,
}

impl NoisyOracle {
    pub fn new(cfg: OracleConfig, truth: GroundTruthLine) -> Self {
        let noise = NoiseDraw::new(cfg.epsilon, cfg.seed);
        Self { cfg, truth, noise }
    }
}

impl Oracle for NoisyOracle {
    fn len(&self) -> usize {
        self.truth.len()
    }

    fn probe(&self, u: usize, v: usize, ledger: &QueryLedger, phase: Phase) -> Result<Probe, OracleError> {
        check_pair(u, v, self.len())?;
        ledger.record(phase);
        let observed = observed_distance(&self.truth, &self.noise, u, v);
        Ok(Probe {
            accepted: accept_edge(&self.cfg, observed),
            score: self.cfg.rho - observed,
        })
    }

    fn weighted(&self) -> bool {
        true
    }

    fn radius(&self) -> Option<usize> {
        Some(self.cfg.c)
    }
}

/// Oracle over precomputed scores. A pair is accepted when a score is stored
/// and exceeds `min_score`.
#[derive(Debug, Clone)]
pub struct MatrixOracle {
    pub store: SimilarityMatrixStore,
    pub min_score: f64,
}

impl MatrixOracle {
    pub fn new(store: SimilarityMatrixStore) -> Self {
        Self {
            store,
            min_score: 0.0,
        }
    }
}

impl Oracle for MatrixOracle {
    fn len(&self) -> usize {
        self.store.len()
    }

    fn probe(&self, u: usize, v: usize, ledger: &QueryLedger, phase: Phase) -> Result<Probe, OracleError> {
        check_pair(u, v, self.len())?;
        ledger.record(phase);
        Ok(match self.store.score(u, v) {
            Some(s) => Probe {
                accepted: s > self.min_score,
                score: s,
            },
            None => Probe {
                accepted: false,
                score: f64::NAN,
            },
        })
    }

    fn weighted(&self) -> bool {
        true
    }
}

/// Symmetric sparse score table. Missing pairs are "not measured", which is
/// distinct from a stored low score.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimilarityMatrixStore {
    n: usize,
    scores: BTreeMap<(usize, usize), f64>,
    provenance: BTreeMap<(usize, usize), (f64, u64)>,
}

impl SimilarityMatrixStore {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn pair_count(&self) -> usize {
        self.scores.len()
    }

    pub fn insert(&mut self, u: usize, v: usize, score: f64) -> Result<(), OracleError> {
        check_pair(u, v, self.n)?;
        self.scores.insert(edge_key(u, v), score);
        Ok(())
    }

    /// Stores `combine_similarity(ssim, inliers)` and keeps the components.
    pub fn insert_components(&mut self, u: usize, v: usize, ssim: f64, inliers: u64) -> Result<(), OracleError> {
        self.insert(u, v, combine_similarity(ssim, inliers))?;
        self.provenance.insert(edge_key(u, v), (ssim, inliers));
        Ok(())
    }

    pub fn score(&self, u: usize, v: usize) -> Option<f64> {
        self.scores.get(&edge_key(u, v)).copied()
    }

    pub fn components(&self, u: usize, v: usize) -> Option<(f64, u64)> {
        self.provenance.get(&edge_key(u, v)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.scores.iter().map(|(&(u, v), &s)| (u, v, s))
    }

    /// Every stored pair as a weighted edge.
    pub fn to_graph(&self) -> SimilarityGraph {
        SimilarityGraph::from_edges(self.n, self.iter())
    }

    /// Parses `i,j,score` rows, optionally with `ssim,inliers` columns. When
    /// the score column is absent it is computed from the components. The
    /// item count is one past the largest id unless `n` is given.
    pub fn read_csv<R: Read>(reader: R, n: Option<usize>) -> Result<Self, OracleError> {
        let parse_err = |line: u64, message: String| OracleError::Parse { line, message };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        if headers.iter().all(str::is_empty) {
            return Err(parse_err(1, "empty input: expected header `i,j,score`".into()));
        }
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (Some(ci), Some(cj)) = (col("i"), col("j")) else {
            return Err(parse_err(1, format!("header must contain `i` and `j`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
        };
        let cscore = col("score");
        let parts = col("ssim").zip(col("inliers"));
        if cscore.is_none() && parts.is_none() {
            return Err(parse_err(1, "header needs `score` or both `ssim` and `inliers`".into()));
        }

        let mut rows = Vec::new();
        let mut max_id = None;
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |idx: usize, name: &str| {
                record
                    .get(idx)
                    .ok_or_else(|| parse_err(line, format!("missing `{name}`")))
            };
            let id = |idx: usize, name: &str| -> Result<usize, OracleError> {
                let raw = field(idx, name)?;
                raw.parse()
                    .map_err(|_| parse_err(line, format!("`{name}` is not an item id: `{raw}`")))
            };
            let real = |idx: usize, name: &str| -> Result<f64, OracleError> {
                let raw = field(idx, name)?;
                match raw.parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(x),
                    _ => Err(parse_err(line, format!("`{name}` is not a finite number: `{raw}`"))),
                }
            };
            let (i, j) = (id(ci, "i")?, id(cj, "j")?);
            if i == j {
                return Err(parse_err(line, format!("self-pair on item {i}")));
            }
            let comps = match parts {
                Some((cs, cn)) => {
                    let ssim = real(cs, "ssim")?;
                    let raw = field(cn, "inliers")?;
                    let inliers: u64 = raw
                        .parse()
                        .map_err(|_| parse_err(line, format!("`inliers` is not a count: `{raw}`")))?;
                    Some((ssim, inliers))
                }
                None => None,
            };
            let score = match cscore {
                Some(cs) => real(cs, "score")?,
                None => {
                    let (ssim, inliers) = comps.expect("components present");
                    combine_similarity(ssim, inliers)
                }
            };
            max_id = max_id.max(Some(i.max(j)));
            rows.push((line, i, j, score, comps));
        }

        let n = n.unwrap_or(max_id.map_or(0, |m| m + 1));
        let mut store = Self::new(n);
        for (line, i, j, score, comps) in rows {
            if i >= n || j >= n {
                return Err(parse_err(line, format!("item id exceeds item count {n}")));
            }
            if store.scores.insert(edge_key(i, j), score).is_some() {
                return Err(parse_err(line, format!("duplicate pair ({i},{j})")));
            }
            if let Some(c) = comps {
                store.provenance.insert(edge_key(i, j), c);
            }
        }
        Ok(store)
    }

    /// Writes `i,j,score`, plus `ssim,inliers` when every pair has them.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), OracleError> {
        let full = !self.provenance.is_empty() && self.provenance.len() == self.scores.len();
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| OracleError::Io(e.into());
        if full {
            w.write_record(["i", "j", "score", "ssim", "inliers"]).map_err(csv_err)?;
        } else {
            w.write_record(["i", "j", "score"]).map_err(csv_err)?;
        }
        for (&(i, j), &s) in &self.scores {
            let mut rec = vec![i.to_string(), j.to_string(), s.to_string()];
            if full {
                let (ssim, inl) = self.provenance[&(i, j)];
                rec.push(ssim.to_string());
                rec.push(inl.to_string());
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Writes a graph in the `i,j,score` format accepted by
/// [`SimilarityMatrixStore::read_csv`].
pub fn write_edge_csv<W: Write>(g: &SimilarityGraph, writer: W) -> Result<(), OracleError> {
    let mut store = SimilarityMatrixStore::new(g.len());
    for (u, v, w) in g.edges() {
        store.insert(u, v, w)?;
    }
    store.write_csv(writer)
}
