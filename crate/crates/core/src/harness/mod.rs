//! Orchestration: config, splits, training runs, metrics, and report
//! rendering.

pub mod config;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod runner;
pub mod split;
pub mod trainer;

pub use config::Config;
pub use metrics::{compute_metrics, RunMetrics};
pub use runner::{
    fc_sweep, repeated_runs, single_run, MetricSummary, ReportBundle, RunOutcome, RunProtocol,
};
pub use split::{split_by_snapshot, split_stratified};
pub use trainer::{evaluate, train_model, TrainConfig};
