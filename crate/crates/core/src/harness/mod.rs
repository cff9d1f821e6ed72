//! Experiment harness: declarative run configs, batch sampling with
//! per-trajectory seeding, and CSV/JSON/binary artifacts.

pub mod compare;
pub mod config;
pub mod fieldio;
pub mod run;

pub use compare::{compare, compare_metrics, CompareReport, MetricDelta};
pub use config::{MasfSetting, OracleKind, RunConfig};
pub use run::{rerun, run, Manifest, MetricsSummary, RunOutput};
