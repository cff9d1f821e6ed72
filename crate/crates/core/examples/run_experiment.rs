//! Full harness round trip: write a dataset, run two configs, reproduce one
//! from its manifest and compare the pair.
//!
//! Usage: cargo run --release --example run_experiment [OUT_DIR]

use std::path::PathBuf;

use masf::harness::{self, fieldio, MasfSetting, OracleKind, RunConfig};
use masf::{Field, Shape, SolverKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> masf::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "masf-demo".into()));
    std::fs::create_dir_all(&out).map_err(|e| masf::Error::Io { path: out.clone(), source: e })?;

    let shape = Shape::new(8, 8, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let points = (0..10)
        .map(|_| Field::from_fn(shape, |_, _, _| if rng.random::<bool>() { 1.0 } else { -1.0 }))
        .collect::<masf::Result<Vec<_>>>()?;
    let dataset = out.join("signs.field");
    fieldio::save_fields(&dataset, &points)?;

    let base = RunConfig {
        solver: SolverKind::Ddpm,
        oracle: OracleKind::Dataset,
        dataset_file: Some(dataset),
        num_samples: 64,
        masf: MasfSetting::Off,
        output_dir: out.join("baseline"),
        ..RunConfig::default()
    };
    let with_ma = RunConfig {
        masf: MasfSetting::DataSpaceOnly,
        output_dir: out.join("averaged"),
        ..base.clone()
    };
    std::fs::write(out.join("averaged.conf"), with_ma.to_text()).map_err(|e| masf::Error::Io { path: out.clone(), source: e })?;

    let a = harness::run(&base)?;
    let b = harness::run(&with_ma)?;
    println!("{} trajectories each in {}", b.manifest.samples.len(), out.display());

    let again = harness::rerun(&b.dir.join("manifest.json"), Some(&out.join("averaged_again")))?;
    let same = b.manifest.samples.iter().all(|f| {
        std::fs::read(b.dir.join(f)).ok() == std::fs::read(again.dir.join(f)).ok()
    });
    println!("rerun from manifest byte-identical: {same}\n");

    print!("{}", harness::compare(&a.dir.join("manifest.json"), &b.dir.join("manifest.json"))?);
    Ok(())
}
