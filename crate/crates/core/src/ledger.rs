//! Exact accounting of oracle probes.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

/// Stage that issued a probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Connect,
    Condense,
    Densify,
    /// Direct lookups outside the construction phases.
    Lookup,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Connect, Phase::Condense, Phase::Densify, Phase::Lookup];

    pub fn label(self) -> &'static str {
        match self {
            Phase::Connect => "connect",
            Phase::Condense => "condense",
            Phase::Densify => "densify",
            Phase::Lookup => "lookup",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Per-phase probe counters. Safe to share across threads; the total is
/// always the sum of the phase counters.
#[derive(Debug, Default)]
pub struct QueryLedger {
    per_phase: [AtomicU64; 4],
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, phase: Phase) {
        self.per_phase[phase.slot()].fetch_add(1, Ordering::Relaxed);
    }

    pub fn count(&self, phase: Phase) -> u64 {
        self.per_phase[phase.slot()].load(Ordering::Relaxed)
    }

    pub fn total(&self) -> u64 {
        Phase::ALL.iter().map(|&p| self.count(p)).sum()
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        let per_phase: BTreeMap<String, u64> = Phase::ALL
            .iter()
            .map(|&p| (p.label().to_string(), self.count(p)))
            .collect();
        LedgerSnapshot {
            total: per_phase.values().sum(),
            per_phase,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub total: u64,
    pub per_phase: BTreeMap<String, u64>,
}
