use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use mfsc::cli::{parse_config, parse_eta_list, run_experiment, ExperimentConfig};

/// Multi-fidelity sparse-grid collocation: runs the pure FE reference and a
/// sweep over the neighbourhood radius eta, writing CSV artifacts.
#[derive(Debug, Parser)]
#[command(name = "mfsc", version)]
struct Args {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Desk-scale defaults (mesh 8 x 8, grid level 4).
    #[arg(long)]
    quick: bool,
    /// Comma-separated radii, e.g. `0.1` or `4,2,2^-3,(1/2)^16`.
    #[arg(long)]
    eta: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep every time step of every node in memory.
    #[arg(long)]
    store_trajectories: bool,
    /// Solve nodes and eta values in parallel.
    #[arg(long)]
    parallel: bool,
}

fn build_config(args: &Args) -> mfsc::Result<ExperimentConfig> {
    let base = if args.quick {
        ExperimentConfig::quick()
    } else {
        ExperimentConfig::default()
    };
    let mut cfg = match &args.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?, base)?,
        None => base,
    };
    if let Some(e) = &args.eta {
        cfg.etas = parse_eta_list(e)?;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    cfg.store_trajectories |= args.store_trajectories;
    cfg.parallel |= args.parallel;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let cfg = match build_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run_experiment(&cfg) {
        Ok(result) => {
            println!(
                "{} grid points, {} eta values; artifacts in {}",
                result.grid_points,
                result.rows.len(),
                cfg.out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_solver_failure() { 2 } else { 1 })
        }
    }
}
