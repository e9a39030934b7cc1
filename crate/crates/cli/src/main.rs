//! `tzlab`: Tzitzeica solutions, their Legendrian frames and the genus-4
//! spectral curves, from the command line.
//!
//! Every subcommand takes `--config job.json`; keys are the long flag names
//! with `_` for `-`, and flags given on the command line win. Exit codes: 0
//! on success, 2 for invalid input, 3 for numerical or verification failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod curve;
mod frame;
mod solve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{resolve, Outcome};

#[derive(Parser, Debug)]
#[command(name = "tzlab", version, about = "Special Lagrangian cones over tori: solver, frames and spectral curves")]
struct Cli {
    /// JSON job config; command-line flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the Tzitzeica equation on a torus.
    Solve(solve::SolveArgs),
    /// Integrate the extended frame, write surface, monodromy and checks.
    Frame(frame::FrameArgs),
    /// Spectral curves of type I and II.
    #[command(subcommand)]
    Curve(curve::CurveCommand),
    /// Print the Legendrian verification report of a solution.
    Verify(frame::FrameArgs),
    /// Write the cone over the Legendrian surface as OBJ or CSV.
    Export(frame::FrameArgs),
}

fn run(cli: &Cli) -> Outcome {
    let cfg = cli.config.as_deref();
    match &cli.command {
        Command::Solve(a) => solve::run(&resolve(a, cfg)?),
        Command::Frame(a) => frame::run_frame(&resolve(a, cfg)?),
        Command::Verify(a) => frame::run_verify(&resolve(a, cfg)?),
        Command::Export(a) => frame::run_export(&resolve(a, cfg)?),
        Command::Curve(c) => curve::run(c, cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
