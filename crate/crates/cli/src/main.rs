use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scenery_homog::config::Kind;
use scenery_homog::{load_config, run, Overrides};

/// Experiment runner for Brownian motion in rescaled random sceneries:
/// effective coefficients, homogenization sweeps, scenery variances,
/// corrector scans, rough-noise moments, and field synthesis checks.
#[derive(Parser)]
#[command(name = "scenery-homog", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Effective damping and variance coefficients for all three regimes.
    Effective(RunArgs),
    /// Finite-epsilon solution sweep against the homogenized limit.
    Homogenize(RunArgs),
    /// Variance of the additive scenery functional along an epsilon schedule.
    Scenery(RunArgs),
    /// Corrector norm and truncated variance along a lambda schedule.
    Corrector(RunArgs),
    /// Rough-noise moments against their closed-form limit.
    Spde(RunArgs),
    /// Field synthesis backends against the analytic covariance.
    FieldCheck(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master_seed (participates in the config hash).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to SCENERY_HOMOG_WORKERS, then all cores.
    /// Results are worker-count-invariant.
    #[arg(long)]
    workers: Option<usize>,
    /// Evaluate acceptance-style checks; exit 1 if any fail.
    #[arg(long)]
    check: bool,
    /// Output directory (default: the config's `out`, else runs/<kind>).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn split(&self) -> (Kind, &RunArgs) {
        match self {
            Command::Effective(a) => (Kind::Effective, a),
            Command::Homogenize(a) => (Kind::Homogenize, a),
            Command::Scenery(a) => (Kind::Scenery, a),
            Command::Corrector(a) => (Kind::Corrector, a),
            Command::Spde(a) => (Kind::Spde, a),
            Command::FieldCheck(a) => (Kind::FieldCheck, a),
        }
    }
}

fn worker_count(args: &RunArgs) -> Option<usize> {
    args.workers.or_else(|| {
        std::env::var("SCENERY_HOMOG_WORKERS")
            .ok()
            .and_then(|s| s.parse().ok())
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();

    let (config, raw) = match load_config(&args.config, kind) {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };

    let overrides = Overrides {
        seed: args.seed,
        out: args.out.clone(),
        check: args.check,
    };

    let execute = || run(config, raw, &overrides);
    let outcome = match worker_count(args) {
        Some(n) => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool,
                Err(e) => {
                    eprintln!("cannot build a {n}-thread pool: {e}");
                    return ExitCode::from(2);
                }
            };
            pool.install(execute)
        }
        None => execute(),
    };

    match outcome {
        Ok(out) => {
            println!(
                "wrote {} ({} files, hash {})",
                out.out_dir.display(),
                out.manifest.outputs.len() + 1,
                &out.manifest.config_hash[..12]
            );
            match out.checks_passed {
                Some(true) => {
                    let n = out.manifest.checks.as_ref().map_or(0, Vec::len);
                    println!("checks: {n} passed");
                    ExitCode::SUCCESS
                }
                Some(false) => {
                    for c in out.manifest.checks.as_deref().unwrap_or(&[]) {
                        if !c.passed {
                            println!(
                                "check failed: {} (observed {:.6e}, wanted {} {:.6e}): {}",
                                c.name,
                                c.observed,
                                if c.comparison.contains("<=") { "<=" } else { ">=" },
                                c.threshold,
                                c.detail
                            );
                        }
                    }
                    ExitCode::FAILURE
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("run failed: {e:#}");
            ExitCode::FAILURE
        }
    }
}
