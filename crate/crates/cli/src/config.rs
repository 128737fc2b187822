//! Flat `key=value` run configuration with CLI overrides and a content hash.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Order,
    MonteCarlo,
    Ablate,
    Scale,
}

impl Command {
    pub fn label(self) -> &'static str {
        match self {
            Self::Order => "order",
            Self::MonteCarlo => "montecarlo",
            Self::Ablate => "ablate",
            Self::Scale => "scale",
        }
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        [Self::Order, Self::MonteCarlo, Self::Ablate, Self::Scale]
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| CliError::Parse(format!("unknown command {s:?}")))
    }
}

/// Every knob a command reads. `out_dir` and `threads` do not affect output
/// contents and are left out of the hash and the persisted form.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<String>,
    pub seed: u64,
    pub k: Option<usize>,
    pub c: Option<usize>,
    pub eps: Option<f64>,
    pub rho: Option<f64>,
    pub variant: Option<String>,
    pub method: Option<String>,
    pub trials: Option<usize>,
    pub n: Option<usize>,
    pub radius: Option<usize>,
    pub p_grid: Option<Vec<f64>>,
    pub sizes: Option<Vec<usize>>,
    pub abort_exponent: Option<f64>,
    pub dump_phase: bool,
    pub timing: bool,
    pub direct: bool,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            input: None,
            seed: 0,
            k: None,
            c: None,
            eps: None,
            rho: None,
            variant: None,
            method: None,
            trials: None,
            n: None,
            radius: None,
            p_grid: None,
            sizes: None,
            abort_exponent: None,
            dump_phase: false,
            timing: false,
            direct: false,
            out_dir: PathBuf::from("."),
            threads: None,
        }
    }

    /// Parses a config file body. Blank lines and `#` comments are skipped.
    pub fn from_kv(command: Command, text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::new(command);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Parse(format!("config line {}: expected key=value", i + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| CliError::Parse(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("bad value {v:?} for {key}"))
        }
        fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, String> {
            v.split(',').map(|x| num(key, x.trim())).collect()
        }
        fn flag(key: &str, v: &str) -> Result<bool, String> {
            match v {
                "true" | "1" => Ok(true),
                "false" | "0" => Ok(false),
                _ => Err(format!("bad value {v:?} for {key}")),
            }
        }
        match key {
            "command" => {
                let c: Command = value.parse().map_err(|e: CliError| e.to_string())?;
                if c != self.command {
                    return Err(format!("config is for {}, not {}", c.label(), self.command.label()));
                }
            }
            "input" => self.input = Some(value.to_string()),
            "seed" => self.seed = num(key, value)?,
            "K" | "k" => self.k = Some(num(key, value)?),
            "c" => self.c = Some(num(key, value)?),
            "eps" => self.eps = Some(num(key, value)?),
            "rho" => self.rho = Some(num(key, value)?),
            "variant" => self.variant = Some(value.to_string()),
            "method" => self.method = Some(value.to_string()),
            "trials" => self.trials = Some(num(key, value)?),
            "n" => self.n = Some(num(key, value)?),
            "radius" => self.radius = Some(num(key, value)?),
            "p_grid" => self.p_grid = Some(list(key, value)?),
            "sizes" => self.sizes = Some(list(key, value)?),
            "abort_exponent" => self.abort_exponent = Some(num(key, value)?),
            "dump_phase" => self.dump_phase = flag(key, value)?,
            "timing" => self.timing = flag(key, value)?,
            "direct" => self.direct = flag(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "threads" => self.threads = Some(num(key, value)?),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Canonical form of every output-relevant setting, one key per line in
    /// a fixed order. Unset options are omitted.
    pub fn to_kv(&self) -> String {
        fn join<T: ToString>(xs: &[T]) -> String {
            xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
        }
        let mut out = String::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                let _ = writeln!(out, "{k}={v}");
            }
        };
        put("command", Some(self.command.label().into()));
        put("input", self.input.clone());
        put("seed", Some(self.seed.to_string()));
        put("K", self.k.map(|x| x.to_string()));
        put("c", self.c.map(|x| x.to_string()));
        put("eps", self.eps.map(|x| x.to_string()));
        put("rho", self.rho.map(|x| x.to_string()));
        put("variant", self.variant.clone());
        put("method", self.method.clone());
        put("trials", self.trials.map(|x| x.to_string()));
        put("n", self.n.map(|x| x.to_string()));
        put("radius", self.radius.map(|x| x.to_string()));
        put("p_grid", self.p_grid.as_deref().map(join));
        put("sizes", self.sizes.as_deref().map(join));
        put("abort_exponent", self.abort_exponent.map(|x| x.to_string()));
        put("dump_phase", Some(self.dump_phase.to_string()));
        put("timing", Some(self.timing.to_string()));
        put("direct", Some(self.direct.to_string()));
        out
    }

    /// Hex SHA-256 of [`RunConfig::to_kv`].
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_kv().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// `{command}_seed{seed}_{first 8 hash chars}`.
    pub fn stem(&self) -> String {
        format!("{}_seed{}_{}", self.command.label(), self.seed, &self.hash()[..8])
    }
}

/// Generator selected by `line:N=500,c=2,eps=0.05[,rho=2.5]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub c: Option<usize>,
    pub eps: Option<f64>,
    pub rho: Option<f64>,
}

impl SyntheticSpec {
    pub fn is_synthetic(input: &str) -> bool {
        input.starts_with("line:")
    }

    pub fn parse(input: &str) -> Result<Self, CliError> {
        let body = input
            .strip_prefix("line:")
            .ok_or_else(|| CliError::Parse(format!("synthetic spec must start with 'line:', got {input:?}")))?;
        let mut spec = Self {
            n: 0,
            c: None,
            eps: None,
            rho: None,
        };
        let bad = |part: &str| CliError::Parse(format!("bad synthetic parameter {part:?}"));
        for part in body.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| bad(part))?;
            match k.trim() {
                "N" | "n" => spec.n = v.trim().parse().map_err(|_| bad(part))?,
                "c" => spec.c = Some(v.trim().parse().map_err(|_| bad(part))?),
                "eps" => spec.eps = Some(v.trim().parse().map_err(|_| bad(part))?),
                "rho" => spec.rho = Some(v.trim().parse().map_err(|_| bad(part))?),
                _ => return Err(bad(part)),
            }
        }
        if spec.n == 0 {
            return Err(CliError::Parse("synthetic spec needs N >= 1".into()));
        }
        Ok(spec)
    }
}
