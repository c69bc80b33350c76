//! `mpet`: accuracy studies, contraction experiment, energy check and the
//! annulus simulation from the command line.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "mpet", version, about = "Multiple-network poroelasticity in the total-pressure formulation")]
pub struct Cli {
    /// Directory for CSV, text and SVG output (created if missing).
    #[arg(long, short, global = true, default_value = "mpet-out")]
    pub out: PathBuf,
    /// TOML problem configuration; command-line overrides win over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Also write SVG line plots of the time series.
    #[arg(long, global = true)]
    pub plot: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convergence study of the manufactured solution on the unit square.
    Accuracy(AccuracyArgs),
    /// Error of each decoupled iterate against the coupled step.
    Contraction(ContractionArgs),
    /// Discrete energy balance of the coupled scheme under constant loads.
    Energy(EnergyArgs),
    /// Physiological four-network model on an annulus, coupled vs decoupled.
    Annulus(AnnulusArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeKind {
    Coupled,
    Decoupled,
}

#[derive(Debug, Args)]
pub struct AccuracyArgs {
    /// `table1` .. `table12`, or `custom` (table 1 settings as a base for overrides).
    #[arg(long, default_value = "table1")]
    pub case: String,
    /// Number of meshes, each halving h.
    #[arg(long)]
    pub levels: Option<usize>,
    /// 1/h of the coarsest mesh.
    #[arg(long)]
    pub base: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub final_time: Option<f64>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeKind>,
    /// Decoupled iterations per step.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Stop the decoupled iteration at this relative increment instead.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Poisson ratio.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Hydraulic conductivity of both networks.
    #[arg(long = "K", alias = "k")]
    pub conductivity: Option<f64>,
    /// Storage coefficient of both networks.
    #[arg(long = "c")]
    pub storage: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ContractionArgs {
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long = "K", alias = "k")]
    pub conductivity: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    /// 1/h of the unit-square mesh.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 2e-3)]
    pub dt: f64,
    /// Largest number of iterations.
    #[arg(long, default_value_t = 200)]
    pub k_max: usize,
    /// Allowed excess of a ratio over the predicted factor.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub slack: f64,
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub dt: f64,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Seed of the random constant loads.
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// Largest accepted relative residual.
    #[arg(long, default_value_t = 1e-8)]
    pub threshold: f64,
    /// Use the time-dependent manufactured loads (refused: the identity needs constant loads).
    #[arg(long)]
    pub time_dependent: bool,
}

#[derive(Debug, Args)]
pub struct AnnulusArgs {
    #[arg(long)]
    pub n_radial: Option<usize>,
    #[arg(long)]
    pub n_angular: Option<usize>,
    #[arg(long)]
    pub final_time: Option<f64>,
    /// Step of the coupled run.
    #[arg(long)]
    pub dt_coupled: Option<f64>,
    /// Step of the decoupled run.
    #[arg(long)]
    pub dt_decoupled: Option<f64>,
    /// Decoupled iterations per step.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Times of the vertex-value snapshots.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,3")]
    pub snapshots: Vec<f64>,
    /// Largest accepted relative probe difference after t = 1 s.
    #[arg(long, default_value_t = 0.01)]
    pub tol: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
