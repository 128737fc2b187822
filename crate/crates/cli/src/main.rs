use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use seriation_cli::{run, CliError, Command, RunConfig};

#[derive(Parser)]
#[command(name = "seriate", version, about = "Query-efficient seriation engine")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Similarity CSV (`i,j,score` or `i,j,ssim,inliers`) or a synthetic
    /// spec such as `line:N=500,c=2,eps=0.05`.
    #[arg(long, global = true)]
    input: Option<String>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Densification window width.
    #[arg(long = "K", global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    c: Option<usize>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    rho: Option<f64>,
    /// Ablation variant(s): No-C, No-D, Small-K, Large-K, Rand-Hook, Ours.
    #[arg(long, global = true)]
    variant: Option<String>,
    /// Monte Carlo method(s): superchain, fiedler, mst.
    #[arg(long, global = true)]
    method: Option<String>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Monte Carlo chain length.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Monte Carlo false-candidate radius.
    #[arg(long, global = true)]
    radius: Option<usize>,
    /// Comma-separated second-best correctness fractions.
    #[arg(long, global = true)]
    p_grid: Option<String>,
    /// Comma-separated item counts.
    #[arg(long, global = true)]
    sizes: Option<String>,
    /// Scaling guard exponent; 0 disables it.
    #[arg(long, global = true)]
    abort_exponent: Option<f64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the graph after every construction phase as an edge CSV.
    #[arg(long, global = true)]
    dump_phase: bool,
    /// Add wall-clock columns to the outputs.
    #[arg(long, global = true)]
    timing: bool,
    /// Order the stored similarity graph without querying.
    #[arg(long, global = true)]
    direct: bool,
    /// `key=value` file; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Order items from a similarity CSV or a synthetic line.
    Order,
    /// Worst-case fragmentation recovery table.
    Montecarlo,
    /// Pipeline ablation table.
    Ablate,
    /// Query and time scaling table.
    Scale,
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let command = match cli.command {
        Cmd::Order => Command::Order,
        Cmd::Montecarlo => Command::MonteCarlo,
        Cmd::Ablate => Command::Ablate,
        Cmd::Scale => Command::Scale,
    };
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            RunConfig::from_kv(command, &text)?
        }
        None => RunConfig::new(command),
    };
    let mut set = |key: &str, value: Option<String>| -> Result<(), CliError> {
        match value {
            Some(v) => cfg.set(key, &v).map_err(CliError::Parse),
            None => Ok(()),
        }
    };
    set("input", cli.input.clone())?;
    set("seed", cli.seed.map(|x| x.to_string()))?;
    set("K", cli.k.map(|x| x.to_string()))?;
    set("c", cli.c.map(|x| x.to_string()))?;
    set("eps", cli.eps.map(|x| x.to_string()))?;
    set("rho", cli.rho.map(|x| x.to_string()))?;
    set("variant", cli.variant.clone())?;
    set("method", cli.method.clone())?;
    set("trials", cli.trials.map(|x| x.to_string()))?;
    set("n", cli.n.map(|x| x.to_string()))?;
    set("radius", cli.radius.map(|x| x.to_string()))?;
    set("p_grid", cli.p_grid.clone())?;
    set("sizes", cli.sizes.clone())?;
    set("abort_exponent", cli.abort_exponent.map(|x| x.to_string()))?;
    set("threads", cli.threads.map(|x| x.to_string()))?;
    set("out_dir", cli.out_dir.as_ref().map(|p| p.display().to_string()))?;
    for (key, on) in [("dump_phase", cli.dump_phase), ("timing", cli.timing), ("direct", cli.direct)] {
        if on {
            set(key, Some("true".into()))?;
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_config(&cli).and_then(|cfg| {
        if let Some(t) = cfg.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| CliError::Other(e.into()))?;
        }
        run(&cfg)
    });
    match result {
        Ok(written) => {
            for f in &written.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let CliError::Incomplete { written, .. } = &e {
                for f in &written.files {
                    println!("{}", f.display());
                }
            }
            eprintln!("seriate: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
