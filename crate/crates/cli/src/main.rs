use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use relgrad_cli::config::ExperimentConfig;
use relgrad_cli::experiment::{cmd_compress_demo, cmd_estimate_l, cmd_pep, cmd_run, RunOptions};
use relgrad_cli::{CliError, Result};

/// Exit status when some cells of a sweep could not be solved.
const PARTIAL_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "relgrad",
    version,
    about = "Gradient methods under relative gradient inexactness"
)]
struct Cli {
    /// JSON experiment config; defaults apply to omitted fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Comma-separated seeds.
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Comma-separated inexactness levels.
    #[arg(long, global = true, value_delimiter = ',')]
    delta_grid: Option<Vec<f64>>,
    /// Iteration count: run length, PEP horizon, or estimation steps.
    #[arg(long, global = true)]
    n_iters: Option<usize>,
    /// Allow PEP horizons above the configured cap.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every method on the logistic problem and write runs.csv and report.csv.
    Run {
        /// Also write per-run trajectories and check every oracle pair.
        #[arg(long)]
        trajectories: Option<PathBuf>,
    },
    /// Worst-case rate sweep, written to pep.csv.
    Pep,
    /// Equal-bit-budget comparison of compressed gradients.
    CompressDemo,
    /// Estimate the smoothness constant and validate it on a fresh run.
    EstimateL,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(dir) = &cli.out_dir {
        config.out_dir = dir.clone();
    }
    if let Some(seeds) = &cli.seeds {
        config.seeds = seeds.clone();
    }
    if let Some(deltas) = &cli.delta_grid {
        config.override_deltas(deltas)?;
    }
    if let Some(n) = cli.n_iters {
        match cli.command {
            Command::Pep => config.pep.n_iters = n,
            Command::EstimateL => config.estimation_iters = n,
            Command::Run { .. } | Command::CompressDemo => config.n_iters = n,
        }
    }
    config.validate()?;
    Ok(config)
}

fn execute(cli: &Cli) -> Result<u8> {
    let config = load(cli)?;
    match &cli.command {
        Command::Run { trajectories } => {
            let options = RunOptions {
                trajectory_dir: trajectories.clone(),
            };
            let out = cmd_run(&config, &options)?;
            println!(
                "L = {:.6e}; {} runs written to {}",
                out.smoothness,
                out.rows.len(),
                config.out_dir.display()
            );
            for r in &out.report {
                println!(
                    "{:<8} {:<5} delta={:<6} grad_sq={:.4e} train_acc={:.4} test_acc={:.4} divergent={}",
                    r.method,
                    if r.shortened { "short" } else { "orig" },
                    r.delta,
                    r.mean_best_grad_norm_sq,
                    r.mean_best_train_acc,
                    r.mean_test_acc_at_best_train,
                    r.divergent_runs
                );
            }
            if out.certificate_failures > 0 {
                return Err(CliError::Config(format!(
                    "{} runs broke the certified inexactness bound",
                    out.certificate_failures
                )));
            }
            Ok(0)
        }
        Command::Pep => {
            let out = cmd_pep(&config, cli.force)?;
            for r in &out.rows {
                let tau = r.tau.map_or_else(|| "-".to_string(), |t| format!("{t:.6}"));
                println!(
                    "{:<8} delta={:<6} N={:<3} shortened={:<5} tau={tau} {}",
                    r.method, r.delta, r.n, r.shortened, r.status
                );
            }
            if out.near_optimal > 0 {
                log::warn!("{} cells are near optimal only", out.near_optimal);
            }
            if out.failures > 0 {
                log::error!("{} cells have no rate value", out.failures);
                return Ok(PARTIAL_FAILURE);
            }
            Ok(0)
        }
        Command::CompressDemo => {
            let out = cmd_compress_demo(&config)?;
            println!("loss at the common budget of {} bits:", out.common_budget);
            for (name, loss) in &out.at_common_budget {
                println!("{name:<16} {loss:.6e}");
            }
            Ok(0)
        }
        Command::EstimateL => {
            let out = cmd_estimate_l(&config, config.estimation_iters)?;
            if out.estimate.l_value == 0.0 {
                log::warn!("gradient vanished at the start point; estimate is zero");
            }
            println!(
                "L = {:.10e} from {} iterates",
                out.estimate.l_value, out.estimate.iterate_count
            );
            if let Some(check) = out.check {
                println!(
                    "validation: max observed curvature {:.10e}, {}",
                    check.max_observed,
                    if check.holds { "holds" } else { "violated" }
                );
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
