//! Synthetic benign and attack traffic, rolling-average features and dataset files.

mod cauchy;
mod dataset;
mod generate;
mod profile;
mod table;

pub use cauchy::{
    cauchy_cdf, fit_truncated_cauchy, scale_attack_params, truncated_log_likelihood, CauchyParams,
};
pub use dataset::{read_dataset, read_dataset_from, write_dataset, write_dataset_to, COLUMNS, TIME_FORMAT};
pub use generate::{generate_traffic, Horizon};
pub use profile::{attacker_count, validate_profiles, AttackScenario, NodeProfile};
pub use table::{
    rolling_averages, slot_delta, NodeMeta, TrafficRow, TrafficTable, NUM_FEATURES, SLOT_MINUTES, WINDOW_MINUTES,
};
