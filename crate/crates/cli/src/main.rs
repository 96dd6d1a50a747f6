//! Batch driver: each verb reads a JSON scenario config and emits
//! deterministic CSV/JSON/SVG artifacts.
//!
//! Exit codes: 2 config error, 3 solver failure, 4 unsupported branch,
//! 5 failed check, 1 write trouble.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "uncert", version, about = "Phase-space uncertainty sweeps and checks")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Ground-state trade-off sweep to curve.csv (optionally curve.svg)
    Curve(RunArgs),
    /// Print one sharp trade-off constant
    Constant(RunArgs),
    /// Report agreement of measurement and preparation uncertainties
    MurCheck(RunArgs),
    /// Cloning-measurement ellipse next to the optimal boundary
    Clone(RunArgs),
    /// Finite bit-string boundaries against the mean-field curve
    Meanfield(RunArgs),
}

#[derive(Args)]
pub struct RunArgs {
    /// JSON scenario config
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (default: config out_dir, else ".")
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also emit SVG plots
    #[arg(long)]
    pub svg: bool,
    /// Override the config's seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override a config field, e.g. --set clone.n=4
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub set: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.verb {
        Verb::Curve(a) => commands::curve(a),
        Verb::Constant(a) => commands::constant(a),
        Verb::MurCheck(a) => commands::mur_check(a),
        Verb::Clone(a) => commands::clone(a),
        Verb::Meanfield(a) => commands::meanfield(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
