//! Moving Average Sampling in Frequency domain (MASF) for diffusion reverse
//! processes.
//!
//! The sampler maps each noisy sample to an estimate of the clean data,
//! keeps an exponential moving average of those estimates per Haar subband,
//! and hands the refined estimate to a DDIM or DDPM step. Analytic denoisers
//! ([`GaussianOracle`], [`DatasetOracle`]) compute exact posterior means, so
//! every trajectory can be checked against known answers.
//!
//! ```no_run
//! use masf::{sample, DatasetOracle, Field, MasfConfig, NoiseSchedule, ScheduleKind,
//!            Shape, SolverConfig, TimestepGrid};
//! use rand::SeedableRng;
//!
//! let shape = Shape::new(8, 8, 1)?;
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
//! let points = (0..4).map(|_| Field::standard_normal(shape, &mut rng)).collect();
//! let oracle = DatasetOracle::new(points)?;
//! let sched = NoiseSchedule::new(ScheduleKind::Linear, 1000)?;
//! let grid = TimestepGrid::uniform(&sched, 10)?;
//! let x_start = Field::standard_normal(shape, &mut rng);
//! let traj = sample(&oracle, &sched, &grid, &SolverConfig::ddpm(7),
//!                   Some(&MasfConfig::default()), x_start)?;
//! println!("{} steps", traj.records.len());
//! # Ok::<(), masf::Error>(())
//! ```

pub mod denoiser;
pub mod error;
pub mod field;
pub mod harness;
pub mod masf;
pub mod metrics;
pub mod schedule;
pub mod solvers;
pub mod wavelet;

pub use crate::denoiser::{DatasetOracle, Denoiser, GaussianOracle};
pub use crate::error::{Error, Result};
pub use crate::field::{Combine, Field, Shape};
pub use crate::masf::{
    adaptive_weight, beta_of, ema_update, refine, FrequencyWeights, MasfConfig, MasfStage,
    MasfState, Refiner, WeightMode,
};
pub use crate::metrics::{gaussian_w2, subband_norms, trajectory_tv, TrajectoryStats};
pub use crate::schedule::{forward_diffuse, NoiseSchedule, ScheduleKind, TimestepGrid};
pub use crate::solvers::{
    ancestral_step, ddim_eta, ddim_step, ddpm_step, eps_from_x0, sample, x0_from_eps,
    SolverConfig, SolverKind, StepRecord, Trajectory,
};
pub use crate::wavelet::{dwt, idwt, Band, SubbandSet};
