//! Metrics, CSV export, complexity budgets and topology comparisons.

mod budget;
mod compare;
mod metrics;

pub use budget::{budget_zo, BudgetInput, BudgetReport};
pub use compare::{compare_topologies, threshold_hits, ThresholdHit, TopologyRun, TopologySummary, DEFAULT_RELATIVE_GAPS};
pub use metrics::{consensus_error, export_csv, MetricsLog, MetricsRow, CSV_HEADER};
