use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use seriation::construct::{ConstructError, PipelineConfig};
use seriation::eval::{
    loglog_slope, monte_carlo_fragmentation, order_accuracy, run_ablation, scaling_study, AblationConfig,
    EvalResult, Method, MonteCarloConfig, ScalingConfig, Variant,
};
use seriation::graph::SimilarityGraph;
use seriation::ledger::{LedgerSnapshot, QueryLedger};
use seriation::oracle::{write_edge_csv, BinaryOracle, MatrixOracle, NoisyOracle, Oracle, OracleConfig, SimilarityMatrixStore};
use seriation::order::{delta_margin, Stage};
use seriation::perm::{GroundTruthLine, Permutation};
use seriation::pipeline::{assemble, run_pipeline, Ordering, PipelineError, PipelineOutcome};

use crate::config::{RunConfig, SyntheticSpec};
use crate::tables::{write_ablation, write_montecarlo, write_permutation, write_scaling};
use crate::CliError;

/// Files written by a command.
#[derive(Debug, Clone, Default)]
pub struct Written {
    pub files: Vec<PathBuf>,
}

impl Written {
    fn create(&mut self, dir: &Path, name: String) -> Result<BufWriter<File>, CliError> {
        let path = dir.join(name);
        let f = File::create(&path).map_err(|e| CliError::Other(anyhow::anyhow!("{}: {e}", path.display())))?;
        self.files.push(path);
        Ok(BufWriter::new(f))
    }

    fn json<T: Serialize>(&mut self, dir: &Path, name: String, value: &T) -> Result<(), CliError> {
        let mut w = self.create(dir, name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Other(e.into()))?;
        writeln!(w).and_then(|_| w.flush()).map_err(io)
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Other(e.into())
}

/// Creates the output directory and persists the canonical config next to
/// the outputs.
fn prepare(cfg: &RunConfig) -> Result<Written, CliError> {
    fs::create_dir_all(&cfg.out_dir).map_err(io)?;
    let mut w = Written::default();
    let mut f = w.create(&cfg.out_dir, format!("{}.config", cfg.stem()))?;
    f.write_all(cfg.to_kv().as_bytes()).and_then(|_| f.flush()).map_err(io)?;
    Ok(w)
}

pub fn run(cfg: &RunConfig) -> Result<Written, CliError> {
    use crate::config::Command::*;
    match cfg.command {
        Order => cmd_order(cfg),
        MonteCarlo => cmd_montecarlo(cfg),
        Ablate => cmd_ablate(cfg),
        Scale => cmd_scale(cfg),
    }
}

#[derive(Debug, Serialize)]
struct CondenseRoundReport {
    bound_before: usize,
    bound_after: usize,
    new_landmarks: usize,
    added_edges: usize,
}

#[derive(Debug, Serialize)]
struct StageCount {
    stage: Stage,
    merges: usize,
}

#[derive(Debug, Serialize)]
struct TimingReport {
    connect_seconds: f64,
    condense_seconds: f64,
    densify_seconds: f64,
    ordering_seconds: f64,
}

#[derive(Debug, Serialize)]
struct OrderReport {
    command: &'static str,
    config_hash: String,
    seed: u64,
    input: String,
    oracle: &'static str,
    n: usize,
    c: usize,
    k: usize,
    variant: Option<&'static str>,
    condensation_skipped: bool,
    densification_skipped: bool,
    queries: LedgerSnapshot,
    calls_per_n: f64,
    boruvka_rounds: Option<usize>,
    tree_bound: Option<usize>,
    condensation_rounds: Vec<CondenseRoundReport>,
    bound_before_ordering: Option<usize>,
    densify_probes: Option<u64>,
    densify_added_edges: Option<usize>,
    densify_passes: Option<usize>,
    graph_edges: usize,
    complete: bool,
    fragment_count: usize,
    fragments: Vec<Vec<usize>>,
    iterations: usize,
    merges_by_stage: Vec<StageCount>,
    accuracy: Option<EvalResult>,
    /// Minimum weight margin over internal items; `None` when unbounded or
    /// without ground truth.
    min_margin: Option<f64>,
    timings: Option<TimingReport>,
}

enum Source {
    Synthetic { truth: GroundTruthLine, oracle: Box<dyn Oracle>, kind: &'static str, c: usize },
    Matrix { store: SimilarityMatrixStore, oracle: MatrixOracle },
}

fn load_source(cfg: &RunConfig, input: &str) -> Result<Source, CliError> {
    if SyntheticSpec::is_synthetic(input) {
        let spec = SyntheticSpec::parse(input)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let truth = GroundTruthLine::unit_spaced(spec.n, &mut rng);
        let eps = cfg.eps.or(spec.eps);
        let rho = cfg.rho.or(spec.rho);
        let c = cfg.c.or(spec.c);
        if eps.is_some() || rho.is_some() {
            let rho = rho.unwrap_or(c.unwrap_or(2) as f64);
            let ocfg = OracleConfig::noisy(rho, eps.unwrap_or(0.0), cfg.seed).map_err(|e| CliError::Parse(e.to_string()))?;
            let c = ocfg.c;
            Ok(Source::Synthetic { truth: truth.clone(), oracle: Box::new(NoisyOracle::new(ocfg, truth)), kind: "noisy", c })
        } else {
            let c = c.unwrap_or(2);
            if c == 0 {
                return Err(CliError::Parse("c must be positive".into()));
            }
            let oracle = BinaryOracle::new(OracleConfig::binary(c, cfg.seed), truth.clone());
            Ok(Source::Synthetic { truth, oracle: Box::new(oracle), kind: "binary", c })
        }
    } else {
        let f = File::open(input).map_err(|e| CliError::Parse(format!("{input}: {e}")))?;
        let store = SimilarityMatrixStore::read_csv(f, None).map_err(|e| CliError::Parse(format!("{input}: {e}")))?;
        let oracle = MatrixOracle::new(store.clone());
        Ok(Source::Matrix { store, oracle })
    }
}

struct Run {
    graph: SimilarityGraph,
    ordering: Ordering,
    permutation: Permutation,
    timings: TimingReport,
    pipeline: Option<PipelineOutcome>,
}

fn stage_counts(ordering: &Ordering) -> Vec<StageCount> {
    [Stage::MiniChains, Stage::IssHeap, Stage::Endpoints, Stage::Fallback]
        .into_iter()
        .map(|stage| StageCount {
            stage,
            merges: ordering.merges().iter().filter(|m| m.stage == stage).count(),
        })
        .collect()
}

fn fragments_of(ordering: &Ordering) -> Vec<Vec<usize>> {
    match ordering {
        Ordering::Complete(_) => Vec::new(),
        Ordering::Fragments { fragments, .. } => fragments.clone(),
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn cmd_order(cfg: &RunConfig) -> Result<Written, CliError> {
    let input = cfg
        .input
        .clone()
        .ok_or_else(|| CliError::Parse("order needs --input (CSV path or line:N=...)".into()))?;
    let source = load_source(cfg, &input)?;
    let variant = cfg
        .variant
        .as_deref()
        .map(|v| v.parse::<Variant>().map_err(|e| CliError::Parse(e.to_string())))
        .transpose()?;
    let mut written = prepare(cfg)?;
    let stem = cfg.stem();
    let dir = cfg.out_dir.clone();

    let (truth, oracle_kind, c, n) = match &source {
        Source::Synthetic { truth, kind, c, .. } => (Some(truth.true_perm().clone()), *kind, *c, truth.len()),
        Source::Matrix { store, .. } => (None, if cfg.direct { "direct" } else { "matrix" }, cfg.c.unwrap_or(2), store.len()),
    };
    if c == 0 {
        return Err(CliError::Parse("c must be positive".into()));
    }
    let mut pcfg = PipelineConfig::new(n, c, cfg.seed);
    if let Some(k) = cfg.k {
        pcfg.k = k;
    }
    if let Some(v) = variant {
        pcfg = v.apply(pcfg, c);
    }

    let ledger = QueryLedger::new();
    let run = match &source {
        Source::Matrix { store, .. } if cfg.direct => {
            let graph = store.to_graph();
            let start = std::time::Instant::now();
            let (ordering, permutation) = assemble(&graph).map_err(|e| CliError::Other(e.into()))?;
            let ordering_seconds = start.elapsed().as_secs_f64();
            Run {
                graph,
                ordering,
                permutation,
                timings: TimingReport {
                    connect_seconds: 0.0,
                    condense_seconds: 0.0,
                    densify_seconds: 0.0,
                    ordering_seconds,
                },
                pipeline: None,
            }
        }
        _ => {
            let oracle: &dyn Oracle = match &source {
                Source::Synthetic { oracle, .. } => oracle.as_ref(),
                Source::Matrix { oracle, .. } => oracle,
            };
            let out = match run_pipeline(oracle, &pcfg, &ledger, cfg.dump_phase) {
                Ok(o) => o,
                Err(PipelineError::Construct(ConstructError::ConnectivityStalled { components })) => {
                    return Err(CliError::Stalled(components.len()));
                }
                Err(e) => return Err(CliError::Other(e.into())),
            };
            for snap in &out.snapshots {
                let w = written.create(&dir, format!("{stem}_{}.edges.csv", snap.label))?;
                write_edge_csv(&snap.graph, w).map_err(|e| CliError::Other(e.into()))?;
            }
            Run {
                graph: out.graph.clone(),
                ordering: out.ordering.clone(),
                permutation: out.permutation.clone(),
                timings: TimingReport {
                    connect_seconds: out.timings.connect.as_secs_f64(),
                    condense_seconds: out.timings.condense.as_secs_f64(),
                    densify_seconds: out.timings.densify.as_secs_f64(),
                    ordering_seconds: out.timings.ordering.as_secs_f64(),
                },
                pipeline: Some(out),
            }
        }
    };
    let Run { graph, ordering, permutation, timings, pipeline } = run;
    let direct_graph = pipeline.is_none();

    {
        let mut w = written.create(&dir, format!("{stem}.perm"))?;
        write_permutation(&permutation, &mut w).and_then(|_| w.flush()).map_err(io)?;
    }

    let accuracy = truth.as_ref().map(|t| order_accuracy(&permutation, t)).transpose().map_err(|e| CliError::Other(e.into()))?;
    let min_margin = truth.as_ref().and_then(|t| finite(delta_margin(&graph, t).global_min));
    let snapshot = ledger.snapshot();
    let extra = pipeline.as_ref();
    let report = OrderReport {
        command: "order",
        config_hash: cfg.hash(),
        seed: cfg.seed,
        input,
        oracle: oracle_kind,
        n,
        c,
        k: pcfg.k,
        variant: variant.map(Variant::label),
        condensation_skipped: direct_graph || pcfg.skip_condensation,
        densification_skipped: direct_graph || pcfg.skip_densification,
        calls_per_n: snapshot.total as f64 / n.max(1) as f64,
        queries: snapshot,
        boruvka_rounds: extra.map(|o| o.boruvka_rounds),
        tree_bound: extra.map(|o| o.tree_bound),
        condensation_rounds: extra
            .and_then(|o| o.condense.as_ref())
            .map(|t| {
                t.rounds
                    .iter()
                    .map(|r| CondenseRoundReport {
                        bound_before: r.bound_before,
                        bound_after: r.bound_after,
                        new_landmarks: r.new_landmarks.len(),
                        added_edges: r.added_edges,
                    })
                    .collect()
            })
            .unwrap_or_default(),
        bound_before_ordering: extra.map(|o| o.bound_before_ordering),
        densify_probes: extra.and_then(|o| o.densify).map(|d| d.probed),
        densify_added_edges: extra.and_then(|o| o.densify).map(|d| d.added_edges),
        densify_passes: extra.and_then(|o| o.densify).map(|d| d.passes),
        graph_edges: graph.edge_count(),
        complete: ordering.is_complete(),
        fragment_count: ordering.fragment_count(),
        fragments: fragments_of(&ordering),
        iterations: ordering.merges().len(),
        merges_by_stage: stage_counts(&ordering),
        accuracy,
        min_margin,
        timings: cfg.timing.then_some(timings),
    };
    written.json(&dir, format!("{stem}.json"), &report)?;
    if !ordering.is_complete() {
        return Err(CliError::Incomplete {
            fragments: ordering.fragment_count(),
            written,
        });
    }
    Ok(written)
}

fn parse_methods(cfg: &RunConfig) -> Result<Vec<Method>, CliError> {
    match &cfg.method {
        None => Ok(Method::ALL.to_vec()),
        Some(s) => s
            .split(',')
            .map(|m| Method::parse(m.trim()).ok_or_else(|| CliError::Parse(format!("unknown method {m:?}"))))
            .collect(),
    }
}

#[derive(Debug, Serialize)]
struct ExperimentReport<C: Serialize, R: Serialize> {
    command: &'static str,
    config_hash: String,
    config: C,
    rows: R,
}

fn cmd_montecarlo(cfg: &RunConfig) -> Result<Written, CliError> {
    let mut mc = MonteCarloConfig {
        seed: cfg.seed,
        ..Default::default()
    };
    if let Some(n) = cfg.n {
        mc.n = n;
    }
    if let Some(t) = cfg.trials {
        mc.trials = t;
    }
    if let Some(r) = cfg.radius {
        mc.false_candidate_radius = r;
    }
    if let Some(p) = &cfg.p_grid {
        mc.p_grid = p.clone();
    }
    let methods = parse_methods(cfg)?;
    mc.validate().map_err(|e| CliError::Parse(e.to_string()))?;
    let rows = monte_carlo_fragmentation(&mc, &methods).map_err(|e| CliError::Other(e.into()))?;
    let mut written = prepare(cfg)?;
    let stem = cfg.stem();
    let w = written.create(&cfg.out_dir, format!("{stem}.csv"))?;
    write_montecarlo(&rows, w)?;
    let report = ExperimentReport {
        command: "montecarlo",
        config_hash: cfg.hash(),
        config: &mc,
        rows: &rows,
    };
    written.json(&cfg.out_dir, format!("{stem}.json"), &report)?;
    Ok(written)
}

#[derive(Debug, Serialize)]
struct CellError<'a> {
    variant: &'static str,
    n: usize,
    seed: u64,
    error: &'a str,
}

#[derive(Debug, Serialize)]
struct AblationReport<'a> {
    command: &'static str,
    config_hash: String,
    config: &'a AblationConfig,
    window_ours: usize,
    rows: Vec<serde_json::Value>,
    cell_errors: Vec<CellError<'a>>,
}

fn cmd_ablate(cfg: &RunConfig) -> Result<Written, CliError> {
    let mut ab = AblationConfig {
        seed: cfg.seed,
        ..Default::default()
    };
    if let Some(rho) = cfg.rho {
        ab.rho = rho;
    } else if let Some(c) = cfg.c {
        ab.rho = c as f64;
    }
    if let Some(e) = cfg.eps {
        ab.epsilon = e;
    }
    if let Some(t) = cfg.trials {
        ab.trials = t;
    }
    if let Some(s) = &cfg.sizes {
        ab.sizes = s.clone();
    }
    let variants: Vec<Variant> = match &cfg.variant {
        None => Variant::ALL.to_vec(),
        Some(s) => s
            .split(',')
            .map(|v| v.trim().parse::<Variant>().map_err(|e| CliError::Parse(e.to_string())))
            .collect::<Result<_, _>>()?,
    };
    let (cells, rows) = run_ablation(&ab, &variants).map_err(|e| CliError::Parse(e.to_string()))?;
    let mut written = prepare(cfg)?;
    let stem = cfg.stem();
    let w = written.create(&cfg.out_dir, format!("{stem}.csv"))?;
    write_ablation(&rows, cfg.timing, w)?;
    let json_rows = rows
        .iter()
        .map(|r| {
            let mut v = serde_json::to_value(r).expect("plain data");
            if !cfg.timing {
                v.as_object_mut().expect("struct").remove("ordering_seconds");
            }
            v
        })
        .collect();
    let report = AblationReport {
        command: "ablate",
        config_hash: cfg.hash(),
        config: &ab,
        window_ours: ab.base_pipeline(ab.sizes[0], 0).k,
        rows: json_rows,
        cell_errors: cells
            .iter()
            .filter_map(|c| {
                c.outcome.as_ref().err().map(|e| CellError {
                    variant: c.variant.label(),
                    n: c.n,
                    seed: c.seed,
                    error: e,
                })
            })
            .collect(),
    };
    written.json(&cfg.out_dir, format!("{stem}.json"), &report)?;
    Ok(written)
}

#[derive(Debug, Serialize)]
struct ScaleRowReport {
    n: usize,
    budget: Option<u64>,
    queries: Option<u64>,
    calls_per_n: Option<f64>,
    exact: Option<bool>,
    error: Option<String>,
    ordering_seconds: Option<f64>,
    pipeline_seconds: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ScaleReport<'a> {
    command: &'static str,
    config_hash: String,
    config: &'a ScalingConfig,
    rows: Vec<ScaleRowReport>,
    /// Least-squares log-log slope over the completed sizes.
    slope: Option<f64>,
    all_sizes_completed: bool,
}

/// Default guard: a size whose ledger outgrows the first size by more than
/// `(N/N0)^1.3` is aborted rather than run to completion. Crossing it already
/// puts the endpoint log-log slope above the near-linear target.
pub const DEFAULT_ABORT_EXPONENT: f64 = 1.3;

fn cmd_scale(cfg: &RunConfig) -> Result<Written, CliError> {
    let mut sc = ScalingConfig {
        seed: cfg.seed,
        epsilon: cfg.eps,
        k: cfg.k,
        abort_exponent: Some(cfg.abort_exponent.unwrap_or(DEFAULT_ABORT_EXPONENT)),
        ..Default::default()
    };
    if let Some(c) = cfg.c {
        sc.c = c;
    }
    if let Some(s) = &cfg.sizes {
        sc.sizes = s.clone();
    }
    if sc.abort_exponent.is_some_and(|e| e <= 0.0) {
        sc.abort_exponent = None;
    }
    let rows = scaling_study(&sc).map_err(|e| CliError::Parse(e.to_string()))?;
    let mut written = prepare(cfg)?;
    let stem = cfg.stem();
    let w = written.create(&cfg.out_dir, format!("{stem}.csv"))?;
    write_scaling(&rows, cfg.timing, w)?;
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|p| (r.n as f64, p.queries as f64)))
        .collect();
    let report = ScaleReport {
        command: "scale",
        config_hash: cfg.hash(),
        config: &sc,
        rows: rows
            .iter()
            .map(|r| {
                let ok = r.outcome.as_ref().ok();
                ScaleRowReport {
                    n: r.n,
                    budget: r.budget,
                    queries: ok.map(|p| p.queries),
                    calls_per_n: ok.map(|p| p.calls_per_n),
                    exact: ok.map(|p| p.exact),
                    error: r.outcome.as_ref().err().cloned(),
                    ordering_seconds: ok.filter(|_| cfg.timing).map(|p| p.ordering_seconds),
                    pipeline_seconds: ok.filter(|_| cfg.timing).map(|p| p.pipeline_seconds),
                }
            })
            .collect(),
        slope: loglog_slope(&points),
        all_sizes_completed: points.len() == rows.len(),
    };
    written.json(&cfg.out_dir, format!("{stem}.json"), &report)?;
    Ok(written)
}
