use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::run::{Manifest, MetricsSummary};

#[derive(Debug, Clone, PartialEq)]
pub enum MetricDelta {
    /// `delta = b − a`.
    Delta { a: f64, b: f64, delta: f64 },
    NotComparable { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub entries: Vec<(String, MetricDelta)>,
}

impl CompareReport {
    pub fn get(&self, name: &str) -> Option<&MetricDelta> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, d)| d)
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, d) in &self.entries {
            match d {
                MetricDelta::Delta { a, b, delta } => {
                    writeln!(f, "{name:<18} a={a:<14.6e} b={b:<14.6e} delta={delta:+.6e}")?
                }
                MetricDelta::NotComparable { reason } => {
                    writeln!(f, "{name:<18} not comparable ({reason})")?
                }
            }
        }
        Ok(())
    }
}

/// Compares two metric summaries, metric by metric.
pub fn compare_metrics(a: &MetricsSummary, b: &MetricsSummary) -> Result<CompareReport> {
    if a.field_shape != b.field_shape {
        return Err(Error::Dimension(format!(
            "runs are not comparable: field shapes {} and {} differ",
            a.field_shape, b.field_shape
        )));
    }
    let names: BTreeSet<&String> = a.summary.keys().chain(b.summary.keys()).collect();
    let entries = names
        .into_iter()
        .map(|name| {
            let d = match (a.summary.get(name), b.summary.get(name)) {
                (Some(&x), Some(&y)) => MetricDelta::Delta {
                    a: x,
                    b: y,
                    delta: y - x,
                },
                (None, _) => MetricDelta::NotComparable {
                    reason: "missing in run a".into(),
                },
                (_, None) => MetricDelta::NotComparable {
                    reason: "missing in run b".into(),
                },
            };
            (name.clone(), d)
        })
        .collect();
    Ok(CompareReport { entries })
}

/// Loads the metrics referenced by two manifests and compares them.
pub fn compare(manifest_a: &Path, manifest_b: &Path) -> Result<CompareReport> {
    let load = |p: &Path| -> Result<MetricsSummary> {
        let m = Manifest::load(p)?;
        let dir = p.parent().unwrap_or_else(|| Path::new("."));
        MetricsSummary::load(&dir.join(&m.metrics))
    };
    compare_metrics(&load(manifest_a)?, &load(manifest_b)?)
}
