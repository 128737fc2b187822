use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::order_accuracy;
use super::EvalError;
use crate::construct::{ConstructError, PipelineConfig};
use crate::ledger::QueryLedger;
use crate::oracle::{BinaryOracle, NoisyOracle, Oracle, OracleConfig};
use crate::perm::GroundTruthLine;
use crate::pipeline::{run_pipeline, PipelineError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub sizes: Vec<usize>,
    pub c: usize,
    /// `None` selects the binary oracle; otherwise the noisy oracle with
    /// `rho = c` and this relative noise.
    pub epsilon: Option<f64>,
    /// Window width; `None` keeps the default `4c`.
    pub k: Option<usize>,
    pub seed: u64,
    /// Abort a size once its ledger exceeds `q0 * (N / N0)^e`, where `q0`
    /// is the total of the first completed size `N0`.
    pub abort_exponent: Option<f64>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            sizes: vec![1_000, 10_000, 100_000],
            c: 2,
            epsilon: None,
            k: None,
            seed: 0,
            abort_exponent: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub queries: u64,
    pub per_phase: BTreeMap<String, u64>,
    pub calls_per_n: f64,
    pub exact: bool,
    pub ordering_seconds: f64,
    pub pipeline_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub budget: Option<u64>,
    pub outcome: Result<ScalingPoint, String>,
}

fn run_point<O: Oracle>(oracle: &O, truth: &GroundTruthLine, cfg: &PipelineConfig) -> Result<ScalingPoint, PipelineError> {
    let n = oracle.len();
    let ledger = QueryLedger::new();
    let start = Instant::now();
    let out = run_pipeline(oracle, cfg, &ledger, false)?;
    let pipeline_seconds = start.elapsed().as_secs_f64();
    let exact = order_accuracy(&out.permutation, truth.true_perm()).is_ok_and(|e| e.is_exact());
    Ok(ScalingPoint {
        queries: out.ledger.total,
        per_phase: out.ledger.per_phase,
        calls_per_n: out.ledger.total as f64 / n as f64,
        exact,
        ordering_seconds: out.timings.ordering.as_secs_f64(),
        pipeline_seconds,
    })
}

/// Runs the pipeline once per size on a fresh synthetic line and records
/// the ledger and timings. Sizes run in the given order.
pub fn scaling_study(cfg: &ScalingConfig) -> Result<Vec<ScalingRow>, EvalError> {
    if cfg.sizes.iter().any(|&n| n < 2) || cfg.c == 0 {
        return Err(EvalError::InvalidConfig("sizes must be at least 2 and c positive".into()));
    }
    let mut reference: Option<(usize, u64)> = None;
    let mut rows = Vec::with_capacity(cfg.sizes.len());
    for &n in &cfg.sizes {
        let seed = cfg.seed ^ (n as u64).rotate_left(32);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = GroundTruthLine::unit_spaced(n, &mut rng);
        let mut pcfg = PipelineConfig::new(n, cfg.c, seed);
        if let Some(k) = cfg.k {
            pcfg.k = k;
        }
        let budget = match (cfg.abort_exponent, reference) {
            (Some(e), Some((n0, q0))) => Some((q0 as f64 * (n as f64 / n0 as f64).powf(e)).ceil() as u64),
            _ => None,
        };
        pcfg.query_budget = budget;
        let point = match cfg.epsilon {
            None => run_point(&BinaryOracle::new(OracleConfig::binary(cfg.c, seed), truth.clone()), &truth, &pcfg),
            Some(eps) => {
                let ocfg = OracleConfig::noisy(cfg.c as f64, eps, seed)
                    .map_err(|e| EvalError::InvalidConfig(e.to_string()))?;
                run_point(&NoisyOracle::new(ocfg, truth.clone()), &truth, &pcfg)
            }
        };
        let outcome = point.map_err(|e| match e {
            PipelineError::Construct(ConstructError::BudgetExceeded { budget, phase }) => {
                format!("aborted: ledger passed {budget} queries during {phase}")
            }
            other => other.to_string(),
        });
        if let (None, Ok(p)) = (reference, &outcome) {
            reference = Some((n, p.queries));
        }
        rows.push(ScalingRow { n, budget, outcome });
    }
    Ok(rows)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_laws() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0].iter().map(|&x| (x, 3.0 * x * x)).collect();
        assert!((loglog_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        let lin: Vec<(f64, f64)> = [2.0, 5.0, 9.0].iter().map(|&x| (x, 7.0 * x)).collect();
        assert!((loglog_slope(&lin).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&[(1.0, 1.0)]), None);
        assert_eq!(loglog_slope(&[(1.0, 1.0), (1.0, 2.0)]), None);
    }

    #[test]
    fn small_sizes_grow_monotonically() {
        let cfg = ScalingConfig {
            sizes: vec![100, 200, 400],
            ..Default::default()
        };
        let rows = scaling_study(&cfg).unwrap();
        let q: Vec<u64> = rows.iter().map(|r| r.outcome.as_ref().unwrap().queries).collect();
        assert!(q.windows(2).all(|w| w[0] < w[1]), "{q:?}");
        assert!(rows.iter().all(|r| r.outcome.as_ref().unwrap().exact));
    }

    #[test]
    fn zero_window_charges_nothing_to_densification() {
        let cfg = ScalingConfig {
            sizes: vec![150],
            k: Some(0),
            ..Default::default()
        };
        let rows = scaling_study(&cfg).unwrap();
        let p = rows[0].outcome.as_ref().unwrap();
        assert_eq!(p.per_phase["densify"], 0);
        assert_eq!(p.queries, p.per_phase["connect"] + p.per_phase["condense"]);
    }

    #[test]
    fn budget_guard_aborts_later_sizes() {
        let cfg = ScalingConfig {
            sizes: vec![100, 400],
            abort_exponent: Some(0.5),
            ..Default::default()
        };
        let rows = scaling_study(&cfg).unwrap();
        assert!(rows[0].outcome.is_ok() && rows[0].budget.is_none());
        let err = rows[1].outcome.as_ref().unwrap_err();
        assert!(err.starts_with("aborted"), "{err}");
    }
}
