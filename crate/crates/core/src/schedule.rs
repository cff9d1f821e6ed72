//! Discrete noise schedules and sampling grids.
//!
//! Timesteps run `1..=T`. Index `0` is the clean-data end of the chain and
//! carries `ᾱ₀ = 1`, so a step from `t` to `0` is the terminal step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;

pub const LINEAR_BETA_START: f64 = 1e-4;
pub const LINEAR_BETA_END: f64 = 0.02;
pub const COSINE_OFFSET: f64 = 0.008;
pub const MIN_ALPHA: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Linear,
    Cosine,
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "cosine" => Ok(Self::Cosine),
            other => Err(Error::Config(format!(
                "unknown schedule kind {other:?} (expected linear or cosine)"
            ))),
        }
    }
}

impl ScheduleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Cosine => "cosine",
        }
    }
}

/// Per-step `α_t` and cumulative `ᾱ_t = Π_{i≤t} α_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    kind: ScheduleKind,
    // both indexed 0..=T; entry 0 is the identity (α₀ = ᾱ₀ = 1)
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    pub fn new(kind: ScheduleKind, timesteps: usize) -> Result<Self> {
        if timesteps < 1 {
            return Err(Error::Parameter(
                "schedule needs at least one timestep".into(),
            ));
        }
        let alphas: Vec<f64> = match kind {
            ScheduleKind::Linear => linear_betas(timesteps)
                .into_iter()
                .map(|b| 1.0 - b)
                .collect(),
            ScheduleKind::Cosine => cosine_alphas(timesteps),
        };
        let mut alpha = Vec::with_capacity(timesteps + 1);
        let mut alpha_bar = Vec::with_capacity(timesteps + 1);
        alpha.push(1.0);
        alpha_bar.push(1.0);
        let mut acc = 1.0;
        for a in alphas {
            acc *= a;
            alpha.push(a);
            alpha_bar.push(acc);
        }
        Ok(Self {
            kind,
            alpha,
            alpha_bar,
        })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    /// Number of training timesteps `T`.
    pub fn timesteps(&self) -> usize {
        self.alpha.len() - 1
    }

    pub fn alpha(&self, t: usize) -> Result<f64> {
        self.check(t)?;
        Ok(self.alpha[t])
    }

    /// `ᾱ_t` for `0 ≤ t ≤ T`, with `ᾱ₀ = 1`.
    pub fn alpha_bar(&self, t: usize) -> Result<f64> {
        self.check(t)?;
        Ok(self.alpha_bar[t])
    }

    /// Noise standard deviation `√(1 − ᾱ_t)` of the forward marginal.
    pub fn sigma(&self, t: usize) -> Result<f64> {
        Ok((1.0 - self.alpha_bar(t)?).sqrt())
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bar
    }

    fn check(&self, t: usize) -> Result<()> {
        if t > self.timesteps() {
            return Err(Error::Parameter(format!(
                "timestep {t} outside 0..={}",
                self.timesteps()
            )));
        }
        Ok(())
    }
}

/// β linearly spaced over `[1e-4, 0.02]`; a single step uses the start value.
fn linear_betas(timesteps: usize) -> Vec<f64> {
    if timesteps == 1 {
        return vec![LINEAR_BETA_START];
    }
    let span = LINEAR_BETA_END - LINEAR_BETA_START;
    (0..timesteps)
        .map(|i| LINEAR_BETA_START + span * i as f64 / (timesteps - 1) as f64)
        .collect()
}

fn cosine_alphas(timesteps: usize) -> Vec<f64> {
    let f = |t: usize| {
        let u = (t as f64 / timesteps as f64 + COSINE_OFFSET) / (1.0 + COSINE_OFFSET);
        (u * std::f64::consts::FRAC_PI_2).cos().powi(2)
    };
    let f0 = f(0);
    (1..=timesteps)
        .map(|t| ((f(t) / f0) / (f(t - 1) / f0)).max(MIN_ALPHA))
        .collect()
}

/// Forward marginal `√ᾱ_t·x₀ + √(1 − ᾱ_t)·ε` for `1 ≤ t ≤ T`.
pub fn forward_diffuse(x0: &Field, t: usize, eps: &Field, sched: &NoiseSchedule) -> Result<Field> {
    if t < 1 || t > sched.timesteps() {
        return Err(Error::Parameter(format!(
            "forward_diffuse timestep {t} outside 1..={}",
            sched.timesteps()
        )));
    }
    let ab = sched.alpha_bar(t)?;
    x0.axpby(ab.sqrt(), eps, (1.0 - ab).sqrt())
}

/// Strictly decreasing timesteps visited by a sampler, one denoiser call each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimestepGrid {
    steps: Vec<usize>,
}

impl TimestepGrid {
    /// `nfe` evenly spaced indices from `T` down to `1`. A single-step grid is `[T]`.
    pub fn uniform(sched: &NoiseSchedule, nfe: usize) -> Result<Self> {
        let t_max = sched.timesteps();
        if nfe < 1 || nfe > t_max {
            return Err(Error::Parameter(format!(
                "nfe {nfe} outside 1..={t_max}"
            )));
        }
        if nfe == 1 {
            return Ok(Self { steps: vec![t_max] });
        }
        let intervals = nfe - 1;
        // round(1 + (T−1)·k/(nfe−1)) in integer arithmetic, k = nfe−1 … 0
        let steps = (0..nfe)
            .rev()
            .map(|k| 1 + ((t_max - 1) * k + intervals / 2) / intervals)
            .collect();
        Self::from_steps(steps)
    }

    /// Wraps an explicit schedule of timesteps, which must be strictly decreasing and ≥ 1.
    pub fn from_steps(steps: Vec<usize>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Parameter("empty timestep grid".into()));
        }
        if steps.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Parameter(
                "timestep grid must be strictly decreasing".into(),
            ));
        }
        if *steps.last().unwrap() < 1 {
            return Err(Error::Parameter("timestep grid entries must be ≥ 1".into()));
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn nfe(&self) -> usize {
        self.steps.len()
    }

    /// Timestep the sampler moves to after grid position `i`; `0` after the last entry.
    pub fn prev(&self, i: usize) -> usize {
        self.steps.get(i + 1).copied().unwrap_or(0)
    }

    /// Grid position of timestep `t`.
    pub fn position(&self, t: usize) -> Option<usize> {
        self.steps.binary_search_by(|probe| t.cmp(probe)).ok()
    }
}
