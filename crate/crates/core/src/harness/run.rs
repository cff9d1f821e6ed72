use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denoiser::GaussianOracle;
use crate::error::{Error, Result};
use crate::field::{Field, Shape};
use crate::harness::config::{OracleKind, PreparedRun, RunConfig};
use crate::harness::fieldio;
use crate::metrics::{self, TrajectoryStats};
use crate::solvers::sample;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRICS_FILE: &str = "metrics.json";

/// Run manifest: the resolved config plus the list of artifacts written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub library: String,
    pub version: String,
    pub config: RunConfig,
    pub field_shape: Shape,
    pub metrics: String,
    pub trajectories: Vec<String>,
    pub samples: Vec<String>,
    pub previews: Vec<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub field_shape: Shape,
    pub num_samples: usize,
    /// Scalar metrics by name: TV statistics always, `w2` for Gaussian oracles.
    pub summary: BTreeMap<String, f64>,
    pub tv_raw: Vec<f64>,
    pub tv_refined: Vec<f64>,
}

impl MetricsSummary {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Outcome of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub metrics: MetricsSummary,
}

/// Seeds for trajectory `index`: the start noise and the solver stream both
/// come from stream `index` of a generator keyed by the run seed, so adding
/// trajectories never changes earlier ones.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

struct TrajectoryResult {
    sample: Field,
    stats: TrajectoryStats,
}

fn run_trajectory(cfg: &RunConfig, prep: &PreparedRun, index: usize) -> Result<TrajectoryResult> {
    let mut rng = trajectory_rng(cfg.seed, index as u64);
    let x_start = Field::standard_normal(prep.shape, &mut rng);
    let solver = cfg.solver_config(rng.next_u64());
    let traj = sample(
        prep.oracle.as_ref(),
        &prep.sched,
        &prep.grid,
        &solver,
        prep.masf.as_ref(),
        x_start,
    )?;
    let stats = TrajectoryStats::from_records(&traj.records, &[])?;
    Ok(TrajectoryResult {
        sample: traj.sample,
        stats,
    })
}

fn write_csv(path: &Path, stats: &TrajectoryStats) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "step",
        "t",
        "norm_ll",
        "norm_lh",
        "norm_hl",
        "norm_hh",
        "tv_raw_increment",
        "tv_refined_increment",
    ])?;
    for (i, t) in stats.timesteps.iter().enumerate() {
        let norms: [String; 4] = match &stats.subband_norms {
            Some(s) => s.at(i).map(|v| v.to_string()),
            None => Default::default(),
        };
        let mut row = vec![i.to_string(), t.to_string()];
        row.extend(norms);
        row.push(stats.tv_raw_increments[i].to_string());
        row.push(stats.tv_refined_increments[i].to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn summarize(values: &[f64], prefix: &str, into: &mut BTreeMap<String, f64>) {
    let n = values.len() as f64;
    into.insert(format!("{prefix}_mean"), values.iter().sum::<f64>() / n);
    if let Some(m) = metrics::median(values) {
        into.insert(format!("{prefix}_median"), m);
    }
}

/// Validates `cfg`, samples every trajectory and writes all artifacts into `cfg.output_dir`.
///
/// Nothing is written if validation fails.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let prep = cfg.prepare()?;
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let ext = fieldio::preview_extension(prep.shape);
    let results: Vec<(TrajectoryResult, [String; 3])> = (0..cfg.num_samples)
        .into_par_iter()
        .map(|i| {
            let res = run_trajectory(cfg, &prep, i)?;
            let names = [
                format!("trajectory_{i:05}.csv"),
                format!("sample_{i:05}.field"),
                format!("sample_{i:05}.{ext}"),
            ];
            write_csv(&dir.join(&names[0]), &res.stats)?;
            fieldio::save_field(&dir.join(&names[1]), &res.sample)?;
            fieldio::save_preview(&dir.join(&names[2]), &res.sample)?;
            Ok((res, names))
        })
        .collect::<Result<_>>()?;

    let tv_raw: Vec<f64> = results.iter().map(|(r, _)| r.stats.tv_raw).collect();
    let tv_refined: Vec<f64> = results.iter().map(|(r, _)| r.stats.tv_refined).collect();
    let mut summary = BTreeMap::new();
    summarize(&tv_raw, "tv_raw", &mut summary);
    summarize(&tv_refined, "tv_refined", &mut summary);
    if cfg.oracle == OracleKind::Gaussian && results.len() >= 2 {
        // re-derive the target from the prepared oracle's inputs
        let mean = match &cfg.gaussian_mu_file {
            Some(p) => fieldio::load_field(p)?,
            None => Field::filled(prep.shape, cfg.gaussian_mu)?,
        };
        let target = GaussianOracle::new(mean, cfg.gaussian_s2)?;
        let samples: Vec<Field> = results.iter().map(|(r, _)| r.sample.clone()).collect();
        summary.insert(
            "w2".into(),
            metrics::gaussian_w2(&samples, target.mean(), target.variance())?,
        );
    }
    let metrics = MetricsSummary {
        field_shape: prep.shape,
        num_samples: cfg.num_samples,
        summary,
        tv_raw,
        tv_refined,
    };
    write_json(&dir.join(METRICS_FILE), &metrics)?;

    let mut manifest = Manifest {
        library: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        field_shape: prep.shape,
        metrics: METRICS_FILE.into(),
        trajectories: Vec::new(),
        samples: Vec::new(),
        previews: Vec::new(),
    };
    for (_, [csv, field, preview]) in results {
        manifest.trajectories.push(csv);
        manifest.samples.push(field);
        manifest.previews.push(preview);
    }
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(RunOutput {
        dir,
        manifest,
        metrics,
    })
}

/// Re-runs the config recorded in a manifest, optionally into another directory.
pub fn rerun(manifest_path: &Path, output_dir: Option<&Path>) -> Result<RunOutput> {
    let mut cfg = Manifest::load(manifest_path)?.config;
    if let Some(d) = output_dir {
        cfg.output_dir = d.to_path_buf();
    }
    run(&cfg)
}
