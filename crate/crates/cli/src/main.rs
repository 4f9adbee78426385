//! `morsecount`: signed solution counts, curvature blow-up sets and bubble
//! flows from the command line.

mod commands;
mod error;
mod input;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use error::{CliError, ErrorKind};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser, Serialize)]
#[command(name = "morsecount", version, about = "Morse-theoretic solution counts for prescribed scalar curvature")]
pub struct Cli {
    /// JSON input: a parity configuration, a curvature function or a bubble sum.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Named built-in input (see `morsecount presets`).
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Directory for report.json, CSV tables and metadata.json.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Signed counts mu_p and the full intermediate table.
    Indices(IndicesArgs),
    /// Per-level lower bounds on the number of solutions.
    Bounds(BoundsArgs),
    /// Cross-checks of the counting routes and Morse equalities.
    Verify(VerifyArgs),
    /// Critical points of K and reduced flows of single bubbles onto them.
    Flow(FlowArgs),
    /// Sobolev constant, bubble mass and a J estimate.
    Quadrature(QuadratureArgs),
    /// Lists the built-in presets.
    Presets,
}

#[derive(Debug, Args, Serialize)]
pub struct ParityArgs {
    /// Comma-separated co-index parities, starting with the global maximum (0).
    #[arg(long)]
    pub parities: Option<String>,
    /// Max level N.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub max_level: Option<usize>,
    /// Sphere dimension n (default 7).
    #[arg(long)]
    pub dim: Option<u32>,
    /// Critical-point seeds when the input is a curvature function.
    #[arg(long, default_value_t = 400)]
    pub seeds: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct IndicesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub parity: ParityArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub parity: ParityArgs,
    /// Margin eta in (0, 1/(2N+1)) for the admissible perturbation size.
    #[arg(long, allow_negative_numbers = true)]
    pub eta: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub parity: ParityArgs,
    /// Sweep every parity configuration with m <= max-m.
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long, default_value_t = 8)]
    pub max_m: usize,
    #[arg(long = "max-N", default_value_t = 12)]
    #[serde(rename = "max_N")]
    pub sweep_level: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Newton,
    Descent,
}

#[derive(Debug, Args, Serialize)]
pub struct QuadratureFlags {
    /// Radial panels per bubble.
    #[arg(long, default_value_t = 32)]
    pub panels: usize,
    /// Gauss-Legendre nodes per panel.
    #[arg(long, default_value_t = 8)]
    pub nodes: usize,
    /// Angular order; automatic when omitted.
    #[arg(long)]
    pub angular: Option<usize>,
    /// Monte Carlo samples; replaces the radial rule when given.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Relative tolerance on the node-doubling difference.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct FlowArgs {
    /// Subcritical defect tau.
    #[arg(long, default_value_t = 0.05)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = Mode::Newton)]
    pub mode: Mode,
    /// Initial concentration of each bubble.
    #[arg(long, default_value_t = 3.0)]
    pub lambda0: f64,
    /// Geodesic distance of the starting center from its blow-up point.
    #[arg(long, default_value_t = 0.02)]
    pub offset: f64,
    /// Flow only towards this blow-up point (0-based).
    #[arg(long)]
    pub point: Option<usize>,
    /// Critical-point search seeds.
    #[arg(long, default_value_t = 400)]
    pub seeds: usize,
    /// Max level N for the blow-up configuration.
    #[arg(long = "N", default_value_t = 4)]
    #[serde(rename = "N")]
    pub max_level: usize,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub quadrature: QuadratureFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct QuadratureArgs {
    /// Sphere dimension n; ignored when a bubble sum is given.
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// Concentration of the single default bubble.
    #[arg(long, default_value_t = 10.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub quadrature: QuadratureFlags,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("MORSECOUNT_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .map_err(|_| CliError::parse(format!("MORSECOUNT_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::new(ErrorKind::Internal, e.to_string()))
}

fn run() -> Result<(), CliError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::parse(e.render().to_string().trim_end())),
    };
    init_threads()?;
    commands::dispatch(&cli)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match std::panic::catch_unwind(run) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            e.emit();
            e.exit_code()
        }
        Err(_) => {
            let e = CliError::new(ErrorKind::Internal, "internal error (panic)");
            e.emit();
            e.exit_code()
        }
    }
}
