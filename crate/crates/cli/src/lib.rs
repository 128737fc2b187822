//! Command-line frontend: run configuration, the `order`, `montecarlo`,
//! `ablate` and `scale` commands, and their output tables.

pub mod commands;
pub mod config;
pub mod tables;

use thiserror::Error;

pub use commands::{run, Written};
pub use config::{Command, RunConfig, SyntheticSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("connectivity stalled with {0} components")]
    Stalled(usize),
    #[error("assembly incomplete: {fragments} fragments (partial output written)")]
    Incomplete { fragments: usize, written: Written },
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse(_) => 2,
            Self::Stalled(_) => 3,
            Self::Incomplete { .. } => 4,
            Self::Other(_) => 1,
        }
    }
}
