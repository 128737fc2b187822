//! Metrics and experiment harnesses: edge-edit accuracy, worst-case
//! fragmentation Monte Carlo, ablation and query scaling.

mod ablation;
mod metrics;
mod montecarlo;
mod scaling;

use thiserror::Error;

pub use ablation::{
    run_ablation, run_cell, sufficient_window, AblationCell, AblationConfig, AblationRow, CellMetrics, Variant,
};
pub use metrics::{edge_edit_distance, order_accuracy, path_edges, EdgeSet, EvalResult};
pub use montecarlo::{
    fragmentation_instance, monte_carlo_fragmentation, recover, trial_rng, wilson_interval, FragmentationInstance,
    Method, MonteCarloConfig, RecoveryRow,
};
pub use scaling::{loglog_slope, scaling_study, ScalingConfig, ScalingPoint, ScalingRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("candidate has {candidate} items, truth has {truth}")]
    LengthMismatch { candidate: usize, truth: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
