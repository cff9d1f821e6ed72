//! Sample a known Gaussian and measure how close the terminal samples get.
//!
//! The oracle's exact posterior mean removes model error, so the remaining
//! gap is discretization error of the solver plus Monte Carlo noise.

use masf::{gaussian_w2, sample, Field, GaussianOracle, MasfConfig, NoiseSchedule, ScheduleKind, Shape, SolverConfig, TimestepGrid};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> masf::Result<()> {
    let shape = Shape::new(2, 2, 1)?;
    let mu = Field::filled(shape, 0.5)?;
    let oracle = GaussianOracle::new(mu.clone(), 0.25)?;
    let sched = NoiseSchedule::new(ScheduleKind::Linear, 1000)?;
    let n = 2000;

    println!("{:>4}  {:>10}  {:>10}  {:>10}", "nfe", "ddim", "ddpm", "ddim+masf");
    for nfe in [5, 10, 25, 50, 100] {
        let grid = TimestepGrid::uniform(&sched, nfe)?;
        let mut row = Vec::new();
        for (solver, masf) in [
            (SolverConfig::ddim(0.0, 0), None),
            (SolverConfig::ddpm(0), None),
            (SolverConfig::ddim(0.0, 0), Some(MasfConfig::default())),
        ] {
            let mut rng = ChaCha8Rng::seed_from_u64(nfe as u64);
            let mut samples = Vec::with_capacity(n);
            for _ in 0..n {
                let x = Field::standard_normal(shape, &mut rng);
                let s = SolverConfig { rng_seed: rng.next_u64(), ..solver };
                samples.push(sample(&oracle, &sched, &grid, &s, masf.as_ref(), x)?.sample);
            }
            row.push(gaussian_w2(&samples, &mu, 0.25)?);
        }
        println!("{nfe:>4}  {:>10.2e}  {:>10.2e}  {:>10.2e}", row[0], row[1], row[2]);
    }
    Ok(())
}
