//! Scenario splits, the training loop, the metric suite and across-group aggregation.

mod aggregate;
mod evaluate;
mod metrics;
mod split;
mod train;

pub use aggregate::{aggregate_groups, mean_ci95, t_quantile_95, AggregatedK, ConfigKey, Interval, MetricsReport, ReportEntry};
pub use evaluate::{evaluate, metrics_by_k, KMetrics};
pub use metrics::{roc_auc, BinaryMetrics, Confusion};
pub use split::{split_scenarios, validate_ratios, Split};
pub use train::{
    make_batch, score_set, split_class_weights, train, write_history, Batch, EpochRecord, PreparedSnapshot,
    ScoredNodes, TrainConfig, TrainOutcome,
};
