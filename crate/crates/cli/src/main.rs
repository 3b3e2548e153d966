//! Batch front end: `pxbiharm <command> --config <path> [--out <dir>] [--seed <n>]`.
//!
//! Exit codes: 0 success, 1 mathematical failure (hypothesis chain, solve, or
//! inequality battery), 2 usage/config error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pxbiharm::cli::{self, RunConfig};

#[derive(Parser)]
#[command(
    name = "pxbiharm",
    about = "Variable-exponent space checks and singular p(x)-biharmonic solves by direct energy minimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Parser)]
struct CommonArgs {
    /// Run configuration (one JSON document)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: config output_dir, or "out")
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override for the sampling batteries
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Hypothesis chain, growth-hypothesis, and inequality batteries
    Verify(CommonArgs),
    /// Valley-seeded energy minimization
    Solve(CommonArgs),
    /// Scan E(tv) against the small-t bound
    Valley(CommonArgs),
    /// One solve per lambda
    Sweep(CommonArgs),
    /// Luxemburg norm and modular of a field file
    Norm {
        #[command(flatten)]
        common: CommonArgs,
        /// Field file (shared JSON format)
        #[arg(long)]
        field: PathBuf,
    },
}

fn run(name: &str, common: &CommonArgs, field: Option<&PathBuf>) -> ExitCode {
    let mut cfg = match RunConfig::from_path(&common.config) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(cli::exit_code_for(&err) as u8);
        }
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out_dir = common
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    match cli::run_command(name, &cfg, &out_dir, field.map(|p| p.as_path())) {
        Ok(outcome) => {
            println!("{}", outcome.message);
            ExitCode::from(outcome.exit as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(cli::exit_code_for(&err) as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Verify(c) => run("verify", c, None),
        Command::Solve(c) => run("solve", c, None),
        Command::Valley(c) => run("valley", c, None),
        Command::Sweep(c) => run("sweep", c, None),
        Command::Norm { common, field } => run("norm", common, Some(field)),
    }
}
