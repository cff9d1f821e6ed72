//! DDIM and DDPM reverse steps, and the sampling loop that threads the
//! moving-average refiner between x₀ estimation and the solver update.
//!
//! Every step is written in terms of a reference x₀ (`x0_ref`). Without MASF
//! that is the raw estimate recovered from the predicted noise; with MASF it
//! is the refined estimate, and the implied noise direction is recomputed from
//! it so the solver sees a consistent `(x₀, ε)` pair.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::denoiser::Denoiser;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::masf::{MasfConfig, Refiner};
use crate::schedule::{NoiseSchedule, TimestepGrid};

/// `(x_t − √(1 − ᾱ_t)·ε) / √ᾱ_t`.
pub fn x0_from_eps(x_t: &Field, eps: &Field, t: usize, sched: &NoiseSchedule) -> Result<Field> {
    let ab = sched.alpha_bar(t)?;
    if ab <= 0.0 {
        return Err(Error::Schedule(format!("alpha_bar({t}) = {ab} is not positive")));
    }
    let inv = 1.0 / ab.sqrt();
    x_t.axpby(inv, eps, -(1.0 - ab).sqrt() * inv)
}

/// `(x_t − √ᾱ_t·x₀) / √(1 − ᾱ_t)`, the noise implied by an x₀ estimate.
pub fn eps_from_x0(x_t: &Field, x0: &Field, t: usize, sched: &NoiseSchedule) -> Result<Field> {
    let ab = sched.alpha_bar(t)?;
    if ab >= 1.0 {
        return Err(Error::DegenerateTimestep { t, alpha_bar: ab });
    }
    let inv = 1.0 / (1.0 - ab).sqrt();
    x_t.axpby(inv, x0, -ab.sqrt() * inv)
}

/// DDIM noise scale `η_t` for a step `t → t_prev` given the global `eta`.
///
/// `eta = 1` reproduces the DDPM posterior variance.
pub fn ddim_eta(eta: f64, t: usize, t_prev: usize, sched: &NoiseSchedule) -> Result<f64> {
    let ab = sched.alpha_bar(t)?;
    let ab_prev = sched.alpha_bar(t_prev)?;
    if ab >= 1.0 {
        return Err(Error::DegenerateTimestep { t, alpha_bar: ab });
    }
    Ok(eta * ((1.0 - ab_prev) / (1.0 - ab)).sqrt() * (1.0 - ab / ab_prev).sqrt())
}

fn check_step(t: usize, t_prev: usize) -> Result<()> {
    if t <= t_prev {
        return Err(Error::Parameter(format!(
            "reverse step must decrease the timestep, got {t} -> {t_prev}"
        )));
    }
    Ok(())
}

/// One DDIM update from `t` to `t_prev`; returns `x0_ref` itself at `t_prev = 0`.
#[allow(clippy::too_many_arguments)]
pub fn ddim_step(
    x_t: &Field,
    x0_ref: &Field,
    t: usize,
    t_prev: usize,
    sched: &NoiseSchedule,
    eta: f64,
    noise: &Field,
) -> Result<Field> {
    check_step(t, t_prev)?;
    x_t.ensure_same_shape(x0_ref)?;
    x_t.ensure_same_shape(noise)?;
    if eta < 0.0 || !eta.is_finite() {
        return Err(Error::Parameter(format!("eta must be ≥ 0, got {eta}")));
    }
    if t_prev == 0 {
        return Ok(x0_ref.clone());
    }
    let ab_prev = sched.alpha_bar(t_prev)?;
    let eta_t = ddim_eta(eta, t, t_prev, sched)?;
    let dir_var = 1.0 - ab_prev - eta_t * eta_t;
    if dir_var < 0.0 {
        return Err(Error::Parameter(format!(
            "eta = {eta} too large for step {t} -> {t_prev} (1 − ᾱ_prev − η² = {dir_var})"
        )));
    }
    let eps = eps_from_x0(x_t, x0_ref, t, sched)?;
    let (c_x0, c_eps) = (ab_prev.sqrt(), dir_var.sqrt());
    let mean = x0_ref.axpby(c_x0, &eps, c_eps)?;
    if eta_t == 0.0 {
        return Ok(mean);
    }
    mean.axpby(1.0, noise, eta_t)
}

/// One DDPM ancestral step `t → t − 1`.
pub fn ddpm_step(x_t: &Field, x0_ref: &Field, t: usize, sched: &NoiseSchedule, noise: &Field) -> Result<Field> {
    if t < 1 {
        return Err(Error::Parameter("ddpm_step needs t ≥ 1".into()));
    }
    ancestral_step(x_t, x0_ref, t, t - 1, sched, noise)
}

/// DDPM ancestral step across a possibly skipped interval `t → t_prev`.
///
/// Uses the effective per-interval `α = ᾱ_t / ᾱ_prev`; with `t_prev = t − 1`
/// this is the usual single-step update. The noise term vanishes at `t_prev = 0`.
pub fn ancestral_step(
    x_t: &Field,
    x0_ref: &Field,
    t: usize,
    t_prev: usize,
    sched: &NoiseSchedule,
    noise: &Field,
) -> Result<Field> {
    check_step(t, t_prev)?;
    x_t.ensure_same_shape(noise)?;
    let ab = sched.alpha_bar(t)?;
    let ab_prev = sched.alpha_bar(t_prev)?;
    let alpha = ab / ab_prev;
    if alpha >= 1.0 {
        return Err(Error::DegenerateTimestep { t, alpha_bar: ab });
    }
    let eps = eps_from_x0(x_t, x0_ref, t, sched)?;
    let inv = 1.0 / alpha.sqrt();
    let mean = x_t.axpby(inv, &eps, -inv * (1.0 - alpha) / (1.0 - ab).sqrt())?;
    let sigma = (((1.0 - ab_prev) / (1.0 - ab)) * (1.0 - alpha)).sqrt();
    if sigma == 0.0 {
        return Ok(mean);
    }
    mean.axpby(1.0, noise, sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Ddpm,
    Ddim,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ddpm => "ddpm",
            Self::Ddim => "ddim",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ddpm" => Ok(Self::Ddpm),
            "ddim" => Ok(Self::Ddim),
            other => Err(Error::Config(format!(
                "unknown solver {other:?} (expected ddpm or ddim)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// DDIM stochasticity; ignored by DDPM.
    pub eta: f64,
    pub rng_seed: u64,
}

impl SolverConfig {
    pub fn ddim(eta: f64, rng_seed: u64) -> Self {
        Self {
            kind: SolverKind::Ddim,
            eta,
            rng_seed,
        }
    }

    pub fn ddpm(rng_seed: u64) -> Self {
        Self {
            kind: SolverKind::Ddpm,
            eta: 1.0,
            rng_seed,
        }
    }

    /// Applies one reverse step with whichever solver is configured.
    pub fn step(
        &self,
        x_t: &Field,
        x0_ref: &Field,
        t: usize,
        t_prev: usize,
        sched: &NoiseSchedule,
        noise: &Field,
    ) -> Result<Field> {
        match self.kind {
            SolverKind::Ddim => ddim_step(x_t, x0_ref, t, t_prev, sched, self.eta, noise),
            SolverKind::Ddpm => ancestral_step(x_t, x0_ref, t, t_prev, sched, noise),
        }
    }
}

/// What the sampler saw and did at one grid step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub x_t: Field,
    /// x₀ recovered from the denoiser's noise prediction.
    pub x0_est: Field,
    /// Estimate handed to the solver; equals `x0_est` when MASF is off.
    pub x0_refined: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub sample: Field,
    pub records: Vec<StepRecord>,
}

/// Runs the reverse process over `grid` starting from `x_start` at `grid.steps()[0]`.
///
/// A fresh noise field is drawn from the solver's seeded stream at every step,
/// whether or not the step uses it, so stochastic and deterministic runs stay
/// aligned on the same stream.
pub fn sample(
    oracle: &dyn Denoiser,
    sched: &NoiseSchedule,
    grid: &TimestepGrid,
    solver: &SolverConfig,
    masf: Option<&MasfConfig>,
    x_start: Field,
) -> Result<Trajectory> {
    let mut refiner = masf.copied().map(Refiner::new).transpose()?;
    let mut rng = ChaCha8Rng::seed_from_u64(solver.rng_seed);
    let shape = x_start.shape();
    let mut x = x_start;
    let mut records = Vec::with_capacity(grid.nfe());
    for (i, &t) in grid.steps().iter().enumerate() {
        let t_prev = grid.prev(i);
        let eps = oracle.predict_eps(&x, t, sched)?;
        let x0_est = x0_from_eps(&x, &eps, t, sched)?;
        let x0_refined = match refiner.as_mut() {
            Some(r) => r.refine(&x0_est, t, grid)?,
            None => x0_est.clone(),
        };
        let noise = Field::standard_normal(shape, &mut rng);
        let next = solver.step(&x, &x0_refined, t, t_prev, sched, &noise)?;
        records.push(StepRecord {
            t,
            x_t: x,
            x0_est,
            x0_refined,
        });
        x = next;
    }
    Ok(Trajectory { sample: x, records })
}
