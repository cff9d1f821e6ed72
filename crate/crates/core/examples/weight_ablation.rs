//! Constant, linear and quadratic adaptive weights across data scales.
//!
//! The linear weight `|x − x̄|` exceeds the constant weight only where the
//! discrepancy is above 1, so which mode smooths more depends on how large
//! the data values are.

use masf::metrics::median;
use masf::{sample, trajectory_tv, DatasetOracle, Field, MasfConfig, MasfStage, NoiseSchedule, ScheduleKind, Shape, SolverConfig, TimestepGrid, WeightMode};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn main() -> masf::Result<()> {
    let shape = Shape::new(8, 8, 1)?;
    let sched = NoiseSchedule::new(ScheduleKind::Linear, 1000)?;
    let grid = TimestepGrid::uniform(&sched, 10)?;

    println!("{:>5}  {:>9}  {:>9}  {:>9}  {:>9}", "scale", "raw", "constant", "linear", "quadratic");
    for scale in [0.5, 1.0, 2.0, 4.0] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let points = (0..10)
            .map(|_| Field::from_fn(shape, |_, _, _| if rng.random::<bool>() { scale } else { -scale }))
            .collect::<masf::Result<Vec<_>>>()?;
        let oracle = DatasetOracle::new(points)?;
        let median_tv = |masf: Option<MasfConfig>| -> masf::Result<f64> {
            let tv = (0..256u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(0);
                    rng.set_stream(i);
                    let x = Field::standard_normal(shape, &mut rng);
                    let traj = sample(&oracle, &sched, &grid, &SolverConfig::ddpm(rng.next_u64()), masf.as_ref(), x)?;
                    trajectory_tv(&traj.records, masf.is_some())
                })
                .collect::<masf::Result<Vec<_>>>()?;
            Ok(median(&tv).unwrap())
        };
        let mut row = vec![median_tv(None)?];
        for weight_mode in WeightMode::ALL {
            row.push(median_tv(Some(MasfConfig {
                weight_mode,
                stage: MasfStage::DataSpaceOnly,
                ..MasfConfig::default()
            }))?);
        }
        println!("{scale:>5}  {:>9.3}  {:>9.3}  {:>9.3}  {:>9.3}", row[0], row[1], row[2], row[3]);
    }
    Ok(())
}
