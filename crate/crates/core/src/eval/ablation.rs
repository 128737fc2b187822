use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::order_accuracy;
use super::EvalError;
use crate::construct::PipelineConfig;
use crate::ledger::QueryLedger;
use crate::oracle::{NoisyOracle, OracleConfig};
use crate::perm::GroundTruthLine;
use crate::pipeline::run_pipeline;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "No-C")]
    NoC,
    #[serde(rename = "No-D")]
    NoD,
    #[serde(rename = "Small-K")]
    SmallK,
    #[serde(rename = "Large-K")]
    LargeK,
    #[serde(rename = "Rand-Hook")]
    RandHook,
    #[serde(rename = "Ours")]
    Ours,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::NoC,
        Variant::NoD,
        Variant::SmallK,
        Variant::LargeK,
        Variant::RandHook,
        Variant::Ours,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::NoC => "No-C",
            Self::NoD => "No-D",
            Self::SmallK => "Small-K",
            Self::LargeK => "Large-K",
            Self::RandHook => "Rand-Hook",
            Self::Ours => "Ours",
        }
    }

    /// Applies the variant's overrides to the full-pipeline configuration.
    pub fn apply(self, mut cfg: PipelineConfig, c: usize) -> PipelineConfig {
        match self {
            Self::NoC => cfg.skip_condensation = true,
            Self::NoD => cfg.skip_densification = true,
            Self::SmallK => cfg.k = c,
            Self::LargeK => cfg.k = 4 * c,
            Self::RandHook => cfg.s = 1,
            Self::Ours => {}
        }
        cfg
    }
}

impl FromStr for Variant {
    type Err = EvalError;

    /// Accepts labels case-insensitively, with or without the hyphen.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = |x: &str| x.replace(['-', '_'], "").to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|v| key(v.label()) == key(s))
            .ok_or_else(|| EvalError::InvalidConfig(format!("unknown variant {s:?}")))
    }
}

/// Smallest window that keeps every true neighbor reachable under relative
/// noise `eps`: `ceil(2 (1 + eps) c)`.
pub fn sufficient_window(c: usize, eps: f64) -> usize {
    (2.0 * (1.0 + eps) * c as f64 - 1e-9).ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub sizes: Vec<usize>,
    pub rho: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            sizes: vec![500],
            rho: 3.0,
            epsilon: 0.05,
            trials: 3,
            seed: 0,
        }
    }
}

impl AblationConfig {
    pub fn c(&self) -> usize {
        self.rho.ceil() as usize
    }

    /// Full-pipeline configuration for one cell before variant overrides.
    pub fn base_pipeline(&self, n: usize, seed: u64) -> PipelineConfig {
        PipelineConfig::new(n, self.c(), seed).with_k(sufficient_window(self.c(), self.epsilon))
    }

    fn trial_seed(&self, t: usize) -> u64 {
        self.seed.wrapping_add(t as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    /// Percentage of true adjacencies missing from the output order,
    /// `100 * Cost_edge / (2(N-1))`.
    pub edge_edit_rate: f64,
    pub calls_per_n: f64,
    /// Double-sweep bound of the graph the provisional order came from.
    pub diameter: usize,
    pub fragments: usize,
    pub ordering_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub variant: Variant,
    pub n: usize,
    pub seed: u64,
    pub outcome: Result<CellMetrics, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: Variant,
    pub n: usize,
    pub runs: usize,
    pub errors: usize,
    pub edge_edit_rate: f64,
    pub calls_per_n: f64,
    pub diameter: f64,
    pub ordering_seconds: f64,
}

pub fn run_cell(cfg: &AblationConfig, variant: Variant, n: usize, seed: u64) -> AblationCell {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = GroundTruthLine::unit_spaced(n, &mut rng);
    let outcome = OracleConfig::noisy(cfg.rho, cfg.epsilon, seed)
        .map_err(|e| e.to_string())
        .and_then(|ocfg| {
            let oracle = NoisyOracle::new(ocfg, truth.clone());
            let pcfg = variant.apply(cfg.base_pipeline(n, seed), cfg.c());
            let ledger = QueryLedger::new();
            let out = run_pipeline(&oracle, &pcfg, &ledger, false).map_err(|e| e.to_string())?;
            let eval = order_accuracy(&out.permutation, truth.true_perm()).map_err(|e| e.to_string())?;
            Ok(CellMetrics {
                edge_edit_rate: 100.0 * (1.0 - eval.accuracy),
                calls_per_n: out.ledger.total as f64 / n as f64,
                diameter: out.bound_before_ordering,
                fragments: out.ordering.fragment_count(),
                ordering_seconds: out.timings.ordering.as_secs_f64(),
            })
        });
    AblationCell {
        variant,
        n,
        seed,
        outcome,
    }
}

/// Runs every `(variant, size, trial)` cell. Pipeline failures are kept in
/// the cell instead of aborting the table.
pub fn run_ablation(cfg: &AblationConfig, variants: &[Variant]) -> Result<(Vec<AblationCell>, Vec<AblationRow>), EvalError> {
    if cfg.trials == 0 || cfg.sizes.is_empty() || cfg.sizes.contains(&0) {
        return Err(EvalError::InvalidConfig("need at least one trial and positive sizes".into()));
    }
    OracleConfig::noisy(cfg.rho, cfg.epsilon, 0).map_err(|e| EvalError::InvalidConfig(e.to_string()))?;
    let jobs: Vec<(Variant, usize, u64)> = variants
        .iter()
        .flat_map(|&v| {
            cfg.sizes
                .iter()
                .flat_map(move |&n| (0..cfg.trials).map(move |t| (v, n, cfg.trial_seed(t))))
        })
        .collect();
    let cells: Vec<AblationCell> = jobs
        .into_par_iter()
        .map(|(v, n, seed)| run_cell(cfg, v, n, seed))
        .collect();
    let rows = variants
        .iter()
        .flat_map(|&v| cfg.sizes.iter().map(move |&n| (v, n)))
        .map(|(variant, n)| {
            let mine: Vec<&AblationCell> = cells.iter().filter(|c| c.variant == variant && c.n == n).collect();
            let ok: Vec<&CellMetrics> = mine.iter().filter_map(|c| c.outcome.as_ref().ok()).collect();
            let mean = |f: &dyn Fn(&CellMetrics) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|m| f(m)).sum::<f64>() / ok.len() as f64
                }
            };
            AblationRow {
                variant,
                n,
                runs: ok.len(),
                errors: mine.len() - ok.len(),
                edge_edit_rate: mean(&|m| m.edge_edit_rate),
                calls_per_n: mean(&|m| m.calls_per_n),
                diameter: mean(&|m| m.diameter as f64),
                ordering_seconds: mean(&|m| m.ordering_seconds),
            }
        })
        .collect();
    Ok((cells, rows))
}
