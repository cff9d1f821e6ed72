//! How subband energy of the clean-data estimate evolves over a trajectory,
//! next to the frequency weights applied at each step.

use masf::{beta_of, dwt, sample, DatasetOracle, Field, FrequencyWeights, MasfConfig, NoiseSchedule, ScheduleKind, Shape, SolverConfig, TimestepGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> masf::Result<()> {
    let shape = Shape::new(16, 16, 1)?;
    // smooth blobs plus fine texture, so both ends of the spectrum carry energy
    let points = (0..6)
        .map(|k| {
            let (cy, cx) = (3.0 + 2.0 * k as f64, 12.0 - 1.5 * k as f64);
            Field::from_fn(shape, |h, w, _| {
                let r2 = (h as f64 - cy).powi(2) + (w as f64 - cx).powi(2);
                let texture = if (h + w + k) % 2 == 0 { 0.15 } else { -0.15 };
                (-r2 / 18.0).exp() * 1.6 - 0.8 + texture
            })
        })
        .collect::<masf::Result<Vec<_>>>()?;
    let oracle = DatasetOracle::new(points)?;
    let sched = NoiseSchedule::new(ScheduleKind::Linear, 1000)?;
    let grid = TimestepGrid::uniform(&sched, 12)?;
    let cfg = MasfConfig::default();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = Field::standard_normal(shape, &mut rng);
    let traj = sample(&oracle, &sched, &grid, &SolverConfig::ddpm(11), Some(&cfg), x)?;

    println!("{:>5}  {:>7} {:>7}  {:>7} {:>7} {:>7} {:>7}", "t", "b_ll", "b_hf", "ll", "lh", "hl", "hh");
    for r in &traj.records {
        let (b_ll, b_hf) = beta_of(r.t, &grid, &cfg.betas)?;
        let n = dwt(&r.x0_est)?.norms();
        println!(
            "{:>5}  {b_ll:>7.4} {b_hf:>7.4}  {:>7.3} {:>7.3} {:>7.3} {:>7.3}",
            r.t, n[0], n[1], n[2], n[3]
        );
    }
    let unit = FrequencyWeights::UNIT;
    println!("\nunit weights keep every band at {:?}", beta_of(1, &grid, &unit)?);
    Ok(())
}
