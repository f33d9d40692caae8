//! Metrics, per-level gate statistics and GLM weight attributions, and
//! exports (report JSON, heatmaps).

mod heatmap;
mod levels;
mod metrics;

pub use heatmap::{export_heatmap, heatmap_csv, heatmap_pgm, HeatmapFormat};
pub use levels::{aav_per_level, full_report, gate_stats, pruned_aav, GateLevelStats, LevelEntry, LevelReport, MetricValue};
pub use metrics::{accuracy, auc, auc_brute_force, metric, rmse, MetricKind};
