//! `gifs`: attractors, chaos games, ergodic averages, invariant measures and
//! difference equations for generalized iterated function systems.
//!
//! Exit codes: 0 success, 1 hypothesis violation, 2 malformed input,
//! 3 non-convergence or escape from the domain.

mod commands;
mod expr;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gifs_core::defaults;

#[derive(Parser)]
#[command(name = "gifs", version, about = "Numerical laboratory for generalized iterated function systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the contraction and weight hypotheses on sampled windows.
    Validate(ValidateArgs),
    /// Iterate the fractal operator of the system and of its extension.
    Attract(AttractArgs),
    /// Run a seeded chaos game and bin its windows.
    Chaos(ChaosArgs),
    /// Time averages, visitation frequencies and holonomic defects.
    Ergodic(ErgodicArgs),
    /// Iterate the Markov operator to its fixed point.
    Measure(MeasureArgs),
    /// Compile and cross-check a difference-equation file.
    Fde(FdeArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Images: PGM densities and PBM set bitmaps.
    Pgm,
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Base,
    Extended,
    Both,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Start {
    /// Dirac mass at the center of the domain.
    Center,
    /// Dirac mass at the lower corner.
    Lo,
    /// Dirac mass at the upper corner.
    Hi,
}

/// Accepts decimals and fractions such as `1/512`.
fn positive_real(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad number `{s}`"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad number `{s}`"))?;
            a / b
        }
        None => s.trim().parse().map_err(|_| format!("bad number `{s}`"))?,
    };
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("`{s}` is not a positive number"))
    }
}

fn positive_count(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) | Err(_) => Err(format!("`{s}` is not a positive integer")),
        Ok(n) => Ok(n),
    }
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// System description (JSON).
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long, default_value_t = defaults::SEED)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long, default_value = "gifs-out")]
    pub out: PathBuf,
    /// Which outputs to write, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Format::Pgm, Format::Csv, Format::Json])]
    pub format: Vec<Format>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = defaults::VALIDATION_SAMPLES, value_parser = positive_count)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct AttractArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = defaults::EPS, value_parser = positive_real)]
    pub eps: f64,
    /// Hausdorff stopping tolerance; defaults to the grid resolution.
    #[arg(long, value_parser = positive_real)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = defaults::MAX_ITER, value_parser = positive_count)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    pub mode: Mode,
}

#[derive(Args, Debug)]
pub struct OrbitArgs {
    /// Post-burn-in steps N.
    #[arg(long, default_value_t = defaults::STEPS, value_parser = positive_count)]
    pub steps: usize,
    #[arg(long, default_value_t = defaults::BURN_IN)]
    pub burn_in: usize,
    /// Initial window, comma separated and oldest first; defaults to the
    /// domain center repeated.
    #[arg(long)]
    pub init: Option<String>,
}

#[derive(Args, Debug)]
pub struct ChaosArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub orbit: OrbitArgs,
    /// Bin width for the density image and the tail cover.
    #[arg(long, default_value_t = defaults::EPS, value_parser = positive_real)]
    pub eps: f64,
}

#[derive(Args, Debug)]
pub struct ErgodicArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub orbit: OrbitArgs,
    /// Observable on points, e.g. `x0` or `0.5*x0*x0`; repeatable.
    #[arg(long)]
    pub observable: Vec<String>,
    /// Observable on windows, e.g. `x0*x1`; repeatable.
    #[arg(long)]
    pub window_observable: Vec<String>,
    /// Box `[name=]lo0,…:hi0,…` for visitation frequencies; repeatable.
    #[arg(long)]
    pub region: Vec<String>,
}

#[derive(Args, Debug)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = Mode::Extended)]
    pub mode: Mode,
    /// Wasserstein stopping tolerance.
    #[arg(long, default_value_t = defaults::TOL, value_parser = positive_real)]
    pub tol: f64,
    #[arg(long, default_value_t = defaults::MAX_ITER, value_parser = positive_count)]
    pub max_iter: usize,
    /// Finest pruning grid; coarsened in dimension above one so that exact
    /// transport stays within its atom cap.
    #[arg(long, default_value_t = defaults::EPS, value_parser = positive_real)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = Start::Center)]
    pub start: Start,
}

#[derive(Args, Debug)]
pub struct FdeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of series coefficients to print.
    #[arg(long, default_value_t = 9, value_parser = positive_count)]
    pub terms: usize,
    /// Orbit length for the closed-form cross-check.
    #[arg(long, default_value_t = 20, value_parser = positive_count)]
    pub steps: usize,
    /// Random initial values and control sequences to cross-check.
    #[arg(long, default_value_t = 1000, value_parser = positive_count)]
    pub samples: usize,
    /// Initial values of the reported orbit, oldest first; defaults to the
    /// domain center.
    #[arg(long)]
    pub init: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Attract(a) => commands::attract(a),
        Command::Chaos(a) => commands::chaos(a),
        Command::Ergodic(a) => commands::ergodic(a),
        Command::Measure(a) => commands::measure(a),
        Command::Fde(a) => commands::fde(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gifs: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
