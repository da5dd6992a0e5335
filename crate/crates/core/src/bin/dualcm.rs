use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dualcm::cli::{run, RunConfig, Subcommand};

/// Numerical solver and property checker for Hessian-quotient equations on
/// the sphere.
#[derive(Debug, Parser)]
#[command(name = "dualcm", version)]
struct Args {
    /// solve | homogeneous | check-phi | verify-properties; overrides the
    /// config's `subcommand`.
    subcommand: Option<String>,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid resolution, e.g. `33` (axisym) or `16,32` (full_s2).
    #[arg(long, value_delimiter = ',')]
    resolution: Option<Vec<usize>>,
    #[arg(long)]
    quiet: bool,
}

fn configure(args: &Args) -> dualcm::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = &args.subcommand {
        cfg.subcommand = s.parse::<Subcommand>()?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(res) = &args.resolution {
        cfg.resolution = res.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = configure(&args).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(outcome) => {
            if !args.quiet {
                for line in &outcome.summary {
                    println!("{line}");
                }
            }
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
