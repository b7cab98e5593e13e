//! `polylyap` command-line front end.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polylyap::learner::CenterMethod;
use polylyap::search::LeafOrder;
use polylyap::Error;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;
pub const EXIT_NO_ROBUST: u8 = 10;
pub const EXIT_BUDGET: u8 = 11;
pub const EXIT_REFUTED: u8 = 12;

#[derive(Debug, Parser)]
#[command(
    name = "polylyap",
    version,
    about = "Polyhedral Lyapunov functions for hybrid linear systems"
)]
pub struct Cli {
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Reproducible output: single-threaded search and no timing data in
    /// artifacts.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a Lyapunov function.
    Synth(SynthArgs),
    /// Check a candidate against a system.
    Verify(VerifyArgs),
    /// Integrate a trajectory to CSV.
    Simulate(SimulateArgs),
    /// Compile a NAE-3SAT instance (DIMACS-like) into a hybrid system.
    EncodeSat(EncodeArgs),
    /// Export the 1-sublevel polygon of a planar candidate.
    PlotData(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub pieces: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub budget_nodes: Option<usize>,
    #[arg(long)]
    pub budget_seconds: Option<f64>,
    #[arg(long, value_enum)]
    pub leaf_order: Option<LeafOrderArg>,
    #[arg(long, value_enum)]
    pub center: Option<CenterArg>,
    /// Expand every child, including relabelled duplicates.
    #[arg(long)]
    pub no_symmetry_breaking: bool,
    /// Result JSON; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON-lines trace of explored nodes.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum LeafOrderArg {
    BestFirst,
    DepthFirst,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum CenterArg {
    Analytic,
    Chebyshev,
}

impl From<CenterArg> for CenterMethod {
    fn from(a: CenterArg) -> Self {
        match a {
            CenterArg::Analytic => CenterMethod::Analytic,
            CenterArg::Chebyshev => CenterMethod::Chebyshev,
        }
    }
}

impl From<LeafOrderArg> for LeafOrder {
    fn from(a: LeafOrderArg) -> Self {
        match a {
            LeafOrderArg::BestFirst => LeafOrder::BestFirst,
            LeafOrderArg::DepthFirst => LeafOrder::DepthFirst,
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub candidate: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub system: PathBuf,
    /// Initial state as comma-separated numbers, e.g. `1.25,0`.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: String,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Use this mode whenever it is active instead of the lowest index.
    #[arg(long)]
    pub prefer_mode: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Instance file: `p nae3 <vars> <clauses>` then one clause per line.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the coordinate and mode index map.
    #[arg(long)]
    pub index_map: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub candidate: PathBuf,
    /// Event log from `synth`; adds the states behind the certified node.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn exit_code_for(err: &Error) -> u8 {
    match err.root() {
        Error::Parse { .. }
        | Error::MalformedInput(_)
        | Error::DimensionMismatch { .. }
        | Error::InvalidConstraint(_)
        | Error::Undecodable(_) => EXIT_PARSE,
        Error::NumericalFailure(_) | Error::InfeasiblePolytope | Error::SimulationStuck { .. } => EXIT_NUMERICAL,
        Error::Precondition(_) | Error::Unsupported(_) | Error::Context { .. } => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("POLYLYAP_LOG", "warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("polylyap: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
