use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use masf::harness::{self, RunConfig};

#[derive(Parser)]
#[command(name = "masf", version, about = "MASF sampling experiments with analytic denoisers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a batch of trajectories and write artifacts.
    Run {
        /// Flat key = value config file.
        #[arg(long, conflicts_with = "manifest")]
        config: Option<PathBuf>,
        /// Reproduce the run recorded in a manifest.json.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Override a config key, e.g. --set gamma=0.3 (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Print the resolved config and exit without sampling.
        #[arg(long)]
        dry_run: bool,
    },
    /// Print per-metric deltas (b − a) between two runs.
    Compare { manifest_a: PathBuf, manifest_b: PathBuf },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> masf::Result<()> {
    match cmd {
        Command::Run {
            config,
            manifest,
            overrides,
            output_dir,
            dry_run,
        } => {
            let mut cfg = match (&config, &manifest) {
                (Some(p), _) => RunConfig::from_file(p)?,
                (None, Some(m)) => harness::Manifest::load(m)?.config,
                (None, None) => RunConfig::default(),
            };
            cfg.apply_overrides(overrides.iter().map(String::as_str))?;
            if let Some(d) = output_dir {
                cfg.output_dir = d;
            }
            if dry_run {
                cfg.prepare()?;
                print!("{}", cfg.to_text());
                return Ok(());
            }
            let out = harness::run(&cfg)?;
            for (k, v) in &out.metrics.summary {
                println!("{k} = {v}");
            }
            println!("wrote {} trajectories to {}", out.manifest.samples.len(), out.dir.display());
            Ok(())
        }
        Command::Compare {
            manifest_a,
            manifest_b,
        } => {
            print!("{}", harness::compare(&manifest_a, &manifest_b)?);
            Ok(())
        }
    }
}
