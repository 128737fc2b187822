use std::collections::BTreeSet;

use serde::Serialize;

use super::EvalError;
use crate::perm::Permutation;

/// Directed edge set `{(order[i], order[i+1])}`.
pub type EdgeSet = BTreeSet<(usize, usize)>;

pub fn path_edges(p: &Permutation) -> EdgeSet {
    p.order().windows(2).map(|w| (w[0], w[1])).collect()
}

/// Size of the symmetric difference.
pub fn edge_edit_distance(a: &EdgeSet, b: &EdgeSet) -> usize {
    a.symmetric_difference(b).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalResult {
    pub eed_forward: usize,
    pub eed_reversed: usize,
    pub cost_edge: usize,
    /// `1 - cost_edge / (2(N-1))`, clamped to `[0, 1]`.
    pub accuracy: f64,
}

impl EvalResult {
    pub fn is_exact(&self) -> bool {
        self.cost_edge == 0
    }
}

/// Scores `candidate` against `truth` in whichever direction is closer.
pub fn order_accuracy(candidate: &Permutation, truth: &Permutation) -> Result<EvalResult, EvalError> {
    if candidate.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            candidate: candidate.len(),
            truth: truth.len(),
        });
    }
    let cand = path_edges(candidate);
    let eed_forward = edge_edit_distance(&cand, &path_edges(truth));
    let eed_reversed = edge_edit_distance(&cand, &path_edges(&truth.reversed()));
    let cost_edge = eed_forward.min(eed_reversed);
    let max_cost = 2 * truth.len().saturating_sub(1);
    let accuracy = if max_cost == 0 {
        1.0
    } else {
        (1.0 - cost_edge as f64 / max_cost as f64).clamp(0.0, 1.0)
    };
    Ok(EvalResult {
        eed_forward,
        eed_reversed,
        cost_edge,
        accuracy,
    })
}
