use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use freshprice_cli::commands;

/// Pricing simulator for perishable SKUs. Set RUST_LOG for more output.
#[derive(Parser)]
#[command(name = "freshprice", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a windowed arrival-rate profile from an order log.
    EstimateLambda {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        window_minutes: f64,
        /// Length of the repeating period (1440 for a day, 10080 for a week).
        #[arg(long)]
        period_minutes: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the configured policy and write trajectories and a summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Evaluate several policies on common random numbers.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated, e.g. fixed,myopic,guardrail,adp
        #[arg(long)]
        policies: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Fit linear value-function weights and write them as CSV.
    FitAdp {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::EstimateLambda {
            log,
            window_minutes,
            period_minutes,
            out,
        } => commands::estimate_lambda(&log, window_minutes, period_minutes, &out).map(drop),
        Command::Simulate {
            config,
            out_dir,
            threads,
        } => commands::simulate(&config, &out_dir, threads).map(drop),
        Command::Compare {
            config,
            policies,
            out,
            threads,
        } => {
            let names = commands::parse_policy_list(&policies)?;
            commands::compare(&config, &names, &out, threads).map(drop)
        }
        Command::FitAdp {
            config,
            out,
            threads,
        } => commands::fit_adp(&config, &out, threads).map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
