//! Moving averages of the clean-data estimate damp the step-to-step swings
//! of a stochastic sampler.
//!
//! Prints the median total variation of the estimate series over 256 DDPM
//! trajectories for each MASF stage, then one cell's trace with and without
//! averaging.

use masf::metrics::{cell_trace, median};
use masf::{sample, trajectory_tv, DatasetOracle, Field, MasfConfig, MasfStage, NoiseSchedule, ScheduleKind, Shape, SolverConfig, TimestepGrid};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn main() -> masf::Result<()> {
    let shape = Shape::new(8, 8, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let points = (0..10)
        .map(|_| Field::from_fn(shape, |_, _, _| if rng.random::<bool>() { 1.0 } else { -1.0 }))
        .collect::<masf::Result<Vec<_>>>()?;
    let oracle = DatasetOracle::new(points)?;
    let sched = NoiseSchedule::new(ScheduleKind::Linear, 1000)?;
    let grid = TimestepGrid::uniform(&sched, 10)?;

    let run = |i: u64, masf: Option<&MasfConfig>| {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        rng.set_stream(i);
        let x = Field::standard_normal(shape, &mut rng);
        sample(&oracle, &sched, &grid, &SolverConfig::ddpm(rng.next_u64()), masf, x)
    };
    let median_tv = |masf: Option<&MasfConfig>| -> masf::Result<f64> {
        let tv = (0..256)
            .into_par_iter()
            .map(|i| trajectory_tv(&run(i, masf)?.records, masf.is_some()))
            .collect::<masf::Result<Vec<_>>>()?;
        Ok(median(&tv).unwrap())
    };

    let raw = median_tv(None)?;
    println!("{:<26} median TV {raw:.4}", "no averaging");
    for stage in [MasfStage::DataSpaceOnly, MasfStage::Frequency, MasfStage::FrequencyPlusWeighting] {
        let cfg = MasfConfig { stage, ..MasfConfig::default() };
        let tv = median_tv(Some(&cfg))?;
        println!("{:<26} median TV {tv:.4} ({:+.1}%)", stage.as_str(), 100.0 * (tv / raw - 1.0));
    }

    let cfg = MasfConfig { stage: MasfStage::DataSpaceOnly, ..MasfConfig::default() };
    let traj = run(0, Some(&cfg))?;
    let before = cell_trace(&traj.records, (3, 4, 0), false)?;
    let after = cell_trace(&traj.records, (3, 4, 0), true)?;
    println!("\ncell (3, 4) in trajectory 0");
    for (t, (b, a)) in grid.steps().iter().zip(before.iter().zip(&after)) {
        println!("  t = {t:>4}  estimate {b:>7.3}  averaged {a:>7.3}");
    }
    Ok(())
}
