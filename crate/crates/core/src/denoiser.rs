//! The noise-prediction contract `ε̂(x_t, t)` and two exact analytic denoisers.
//!
//! Both oracles compute the true posterior mean `E[x₀ | x_t]` of a known data
//! distribution and return the noise that maps back to it under the usual
//! x₀ parameterization, so a sampler driven by them follows the ideal
//! reverse trajectory.

use crate::error::{Error, Result};
use crate::field::{Field, Shape};
use crate::schedule::NoiseSchedule;
use crate::solvers::eps_from_x0;

pub trait Denoiser: Send + Sync {
    /// Predicted noise for `x_t` at timestep `t`; same shape as `x_t`.
    fn predict_eps(&self, x_t: &Field, t: usize, sched: &NoiseSchedule) -> Result<Field>;

    /// Shape of the data this denoiser models, if it is fixed.
    fn data_shape(&self) -> Option<Shape> {
        None
    }
}

fn noisy_alpha_bar(t: usize, sched: &NoiseSchedule) -> Result<f64> {
    if t < 1 {
        return Err(Error::Parameter("denoiser timestep must be ≥ 1".into()));
    }
    let ab = sched.alpha_bar(t)?;
    if ab >= 1.0 {
        return Err(Error::DegenerateTimestep { t, alpha_bar: ab });
    }
    Ok(ab)
}

/// Data distribution `N(μ, s²·I)`.
#[derive(Debug, Clone)]
pub struct GaussianOracle {
    mean: Field,
    variance: f64,
}

impl GaussianOracle {
    pub fn new(mean: Field, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::Parameter(format!(
                "gaussian variance must be positive and finite, got {variance}"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn mean(&self) -> &Field {
        &self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// `(√ᾱ·s²·x_t + (1 − ᾱ)·μ) / (ᾱ·s² + 1 − ᾱ)`.
    pub fn posterior_mean(&self, x_t: &Field, t: usize, sched: &NoiseSchedule) -> Result<Field> {
        self.mean.ensure_same_shape(x_t)?;
        let ab = noisy_alpha_bar(t, sched)?;
        let s2 = self.variance;
        let denom = ab * s2 + (1.0 - ab);
        x_t.axpby(ab.sqrt() * s2 / denom, &self.mean, (1.0 - ab) / denom)
    }
}

impl Denoiser for GaussianOracle {
    fn predict_eps(&self, x_t: &Field, t: usize, sched: &NoiseSchedule) -> Result<Field> {
        let x0 = self.posterior_mean(x_t, t, sched)?;
        eps_from_x0(x_t, &x0, t, sched)
    }

    fn data_shape(&self) -> Option<Shape> {
        Some(self.mean.shape())
    }
}

/// Empirical data distribution: uniform over a finite set of points.
#[derive(Debug, Clone)]
pub struct DatasetOracle {
    points: Vec<Field>,
}

impl DatasetOracle {
    pub fn new(points: Vec<Field>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::Parameter("dataset oracle needs at least one point".into()))?;
        for p in &points[1..] {
            first.ensure_same_shape(p)?;
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Field] {
        &self.points
    }

    /// Posterior probability of each point given `x_t`.
    pub fn posterior_weights(&self, x_t: &Field, t: usize, sched: &NoiseSchedule) -> Result<Vec<f64>> {
        self.points[0].ensure_same_shape(x_t)?;
        let ab = noisy_alpha_bar(t, sched)?;
        let scale = ab.sqrt();
        let inv = 1.0 / (2.0 * (1.0 - ab));
        let logits: Vec<f64> = self
            .points
            .iter()
            .map(|y| {
                let d2: f64 = x_t
                    .data()
                    .iter()
                    .zip(y.data())
                    .map(|(x, y)| {
                        let r = x - scale * y;
                        r * r
                    })
                    .sum();
                -d2 * inv
            })
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(weights)
    }

    /// `Σ_i softmax_i · y_i`.
    pub fn posterior_mean(&self, x_t: &Field, t: usize, sched: &NoiseSchedule) -> Result<Field> {
        let weights = self.posterior_weights(x_t, t, sched)?;
        let shape = x_t.shape();
        let mut acc = vec![0.0; shape.len()];
        for (w, y) in weights.iter().zip(&self.points) {
            if *w == 0.0 {
                continue;
            }
            for (a, v) in acc.iter_mut().zip(y.data()) {
                *a += w * v;
            }
        }
        Field::new(shape, acc)
    }
}

impl Denoiser for DatasetOracle {
    fn predict_eps(&self, x_t: &Field, t: usize, sched: &NoiseSchedule) -> Result<Field> {
        let x0 = self.posterior_mean(x_t, t, sched)?;
        eps_from_x0(x_t, &x0, t, sched)
    }

    fn data_shape(&self) -> Option<Shape> {
        Some(self.points[0].shape())
    }
}
