use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

#[derive(Parser, Debug)]
#[command(name = "rho", version, about = "Robust density estimation, model selection, aggregation and regression")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// JSON config for the subcommand
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "json", value_parser = ["csv", "json"])]
    pub format: String,
    /// psi1 or psi2 (default psi2; overrides the estimator's kernel in bench configs)
    #[arg(long, global = true)]
    pub psi: Option<String>,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub kappa_multiplier: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub c1: f64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// ρ-estimate over one finite family
    Fit,
    /// Penalized selection over several models
    Select,
    /// Convex aggregation of candidate densities
    Aggregate,
    /// Random-design regression with error-model selection
    Regress,
    /// Monte Carlo risk study
    Bench,
    /// Dimension bounds and related constants
    Bounds(commands::BoundsArgs),
    /// Likelihood failure under a singular representation of the normal family
    DemoMle(commands::DemoMleArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli.command, &cli.global) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
