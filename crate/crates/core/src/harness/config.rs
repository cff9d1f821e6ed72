//! Run configuration: a flat `key = value` text format whose keys are exactly
//! the fields of [`RunConfig`].
//!
//! ```text
//! # comments start with '#'
//! schedule = linear
//! timesteps = 1000
//! nfe = 10
//! solver = ddpm
//! oracle = dataset
//! dataset_file = points.field
//! masf = frequency_plus_weighting
//! gamma = 0.5
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::denoiser::{DatasetOracle, Denoiser, GaussianOracle};
use crate::error::{Error, Result};
use crate::field::{Field, Shape};
use crate::harness::fieldio;
use crate::masf::{FrequencyWeights, MasfConfig, MasfStage, WeightMode};
use crate::schedule::{NoiseSchedule, ScheduleKind, TimestepGrid};
use crate::solvers::{SolverConfig, SolverKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Gaussian,
    Dataset,
}

/// MASF setting of a run; `Off` disables refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MasfSetting {
    Off,
    DataSpaceOnly,
    Frequency,
    FrequencyPlusWeighting,
}

impl MasfSetting {
    pub fn stage(self) -> Option<MasfStage> {
        match self {
            Self::Off => None,
            Self::DataSpaceOnly => Some(MasfStage::DataSpaceOnly),
            Self::Frequency => Some(MasfStage::Frequency),
            Self::FrequencyPlusWeighting => Some(MasfStage::FrequencyPlusWeighting),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schedule: ScheduleKind,
    pub timesteps: usize,
    pub nfe: usize,
    pub solver: SolverKind,
    pub eta: f64,
    pub oracle: OracleKind,
    /// Scalar mean used when `gaussian_mu_file` is unset.
    pub gaussian_mu: f64,
    pub gaussian_mu_file: Option<PathBuf>,
    pub gaussian_s2: f64,
    pub dataset_file: Option<PathBuf>,
    /// Field shape for a Gaussian oracle with a scalar mean.
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub masf: MasfSetting,
    pub gamma: f64,
    pub weight_mode: WeightMode,
    pub beta_ll_start: f64,
    pub beta_ll_end: f64,
    pub beta_hf_start: f64,
    pub beta_hf_end: f64,
    pub num_samples: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let b = FrequencyWeights::default();
        Self {
            schedule: ScheduleKind::Linear,
            timesteps: 1000,
            nfe: 10,
            solver: SolverKind::Ddim,
            eta: 0.0,
            oracle: OracleKind::Gaussian,
            gaussian_mu: 0.0,
            gaussian_mu_file: None,
            gaussian_s2: 1.0,
            dataset_file: None,
            height: 8,
            width: 8,
            channels: 1,
            masf: MasfSetting::FrequencyPlusWeighting,
            gamma: 0.5,
            weight_mode: WeightMode::Linear,
            beta_ll_start: b.ll_start,
            beta_ll_end: b.ll_end,
            beta_hf_start: b.hf_start,
            beta_hf_end: b.hf_end,
            num_samples: 16,
            seed: 0,
            output_dir: PathBuf::from("masf-out"),
        }
    }
}

/// Every key accepted by [`RunConfig::set`], in manifest order.
pub const KEYS: &[&str] = &[
    "schedule",
    "timesteps",
    "nfe",
    "solver",
    "eta",
    "oracle",
    "gaussian_mu",
    "gaussian_mu_file",
    "gaussian_s2",
    "dataset_file",
    "height",
    "width",
    "channels",
    "masf",
    "gamma",
    "weight_mode",
    "beta_ll_start",
    "beta_ll_end",
    "beta_hf_start",
    "beta_hf_end",
    "num_samples",
    "seed",
    "output_dir",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key} = {value:?}: {e}")))
}

fn optional_path(value: &str) -> Option<PathBuf> {
    match value {
        "" | "none" => None,
        v => Some(PathBuf::from(v)),
    }
}

impl RunConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "schedule" => self.schedule = v.parse()?,
            "timesteps" => self.timesteps = parse(key, v)?,
            "nfe" => self.nfe = parse(key, v)?,
            "solver" => self.solver = v.parse()?,
            "eta" => self.eta = parse(key, v)?,
            "oracle" => {
                self.oracle = match v {
                    "gaussian" => OracleKind::Gaussian,
                    "dataset" => OracleKind::Dataset,
                    _ => {
                        return Err(Error::Config(format!(
                            "oracle = {v:?}: expected gaussian or dataset"
                        )))
                    }
                }
            }
            "gaussian_mu" => self.gaussian_mu = parse(key, v)?,
            "gaussian_mu_file" => self.gaussian_mu_file = optional_path(v),
            "gaussian_s2" => self.gaussian_s2 = parse(key, v)?,
            "dataset_file" => self.dataset_file = optional_path(v),
            "height" => self.height = parse(key, v)?,
            "width" => self.width = parse(key, v)?,
            "channels" => self.channels = parse(key, v)?,
            "masf" => {
                self.masf = match v {
                    "off" => MasfSetting::Off,
                    other => match other.parse::<MasfStage>()? {
                        MasfStage::DataSpaceOnly => MasfSetting::DataSpaceOnly,
                        MasfStage::Frequency => MasfSetting::Frequency,
                        MasfStage::FrequencyPlusWeighting => MasfSetting::FrequencyPlusWeighting,
                    },
                }
            }
            "gamma" => self.gamma = parse(key, v)?,
            "weight_mode" => self.weight_mode = v.parse()?,
            "beta_ll_start" => self.beta_ll_start = parse(key, v)?,
            "beta_ll_end" => self.beta_ll_end = parse(key, v)?,
            "beta_hf_start" => self.beta_hf_start = parse(key, v)?,
            "beta_hf_end" => self.beta_hf_end = parse(key, v)?,
            "num_samples" => self.num_samples = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            other => {
                return Err(Error::Config(format!(
                    "unknown key {other:?}; known keys: {}",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies `key=value` assignments, e.g. from repeated command-line flags.
    pub fn apply_overrides<'a>(&mut self, overrides: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for item in overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Parses config text on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value, got {raw:?}", n + 1))
            })?;
            cfg.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Text form accepted by [`RunConfig::from_text`].
    pub fn to_text(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or("none".to_string(), |p| p.display().to_string());
        let masf = match self.masf.stage() {
            None => "off",
            Some(s) => s.as_str(),
        };
        let oracle = match self.oracle {
            OracleKind::Gaussian => "gaussian",
            OracleKind::Dataset => "dataset",
        };
        let values: Vec<String> = vec![
            self.schedule.as_str().into(),
            self.timesteps.to_string(),
            self.nfe.to_string(),
            self.solver.as_str().into(),
            self.eta.to_string(),
            oracle.into(),
            self.gaussian_mu.to_string(),
            path(&self.gaussian_mu_file),
            self.gaussian_s2.to_string(),
            path(&self.dataset_file),
            self.height.to_string(),
            self.width.to_string(),
            self.channels.to_string(),
            masf.into(),
            self.gamma.to_string(),
            self.weight_mode.as_str().into(),
            self.beta_ll_start.to_string(),
            self.beta_ll_end.to_string(),
            self.beta_hf_start.to_string(),
            self.beta_hf_end.to_string(),
            self.num_samples.to_string(),
            self.seed.to_string(),
            self.output_dir.display().to_string(),
        ];
        KEYS.iter()
            .zip(values)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn masf_config(&self) -> Option<MasfConfig> {
        self.masf.stage().map(|stage| MasfConfig {
            gamma: self.gamma,
            weight_mode: self.weight_mode,
            betas: FrequencyWeights {
                ll_start: self.beta_ll_start,
                ll_end: self.beta_ll_end,
                hf_start: self.beta_hf_start,
                hf_end: self.beta_hf_end,
            },
            stage,
        })
    }

    /// Checks every parameter and loads oracle inputs, without touching the output directory.
    pub fn prepare(&self) -> Result<PreparedRun> {
        let sched = NoiseSchedule::new(self.schedule, self.timesteps)?;
        let grid = TimestepGrid::uniform(&sched, self.nfe)?;
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("eta must be ≥ 0, got {}", self.eta)));
        }
        if self.num_samples == 0 {
            return Err(Error::Config("num_samples must be ≥ 1".into()));
        }
        let masf = self.masf_config();
        if let Some(m) = &masf {
            m.validate()?;
        }
        let oracle: Box<dyn Denoiser> = match self.oracle {
            OracleKind::Gaussian => {
                let mean = match &self.gaussian_mu_file {
                    Some(p) => fieldio::load_field(p)?,
                    None => Field::filled(
                        Shape::new(self.height, self.width, self.channels)?,
                        self.gaussian_mu,
                    )?,
                };
                Box::new(GaussianOracle::new(mean, self.gaussian_s2)?)
            }
            OracleKind::Dataset => {
                let path = self.dataset_file.as_ref().ok_or_else(|| {
                    Error::Config("oracle = dataset needs dataset_file".into())
                })?;
                Box::new(DatasetOracle::new(fieldio::load_fields(path)?)?)
            }
        };
        let shape = Shape::new(self.height, self.width, self.channels)?;
        let data_shape = oracle
            .data_shape()
            .ok_or_else(|| Error::Invariant("oracle without a data shape".into()))?;
        if data_shape != shape {
            return Err(Error::Dimension(format!(
                "oracle data has shape {data_shape}, config asks for {shape}"
            )));
        }
        if matches!(self.masf, MasfSetting::Frequency | MasfSetting::FrequencyPlusWeighting)
            && (shape.height % 2 != 0 || shape.width % 2 != 0)
        {
            return Err(Error::Config(format!(
                "frequency-domain MASF needs even height and width, data shape is {shape}"
            )));
        }
        Ok(PreparedRun {
            sched,
            grid,
            oracle,
            shape,
            masf,
        })
    }

    pub fn solver_config(&self, rng_seed: u64) -> SolverConfig {
        SolverConfig {
            kind: self.solver,
            eta: self.eta,
            rng_seed,
        }
    }
}

/// Validated, ready-to-sample form of a [`RunConfig`].
pub struct PreparedRun {
    pub sched: NoiseSchedule,
    pub grid: TimestepGrid,
    pub oracle: Box<dyn Denoiser>,
    pub shape: Shape,
    pub masf: Option<MasfConfig>,
}
