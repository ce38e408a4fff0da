//! `qaoa`: generate instances, compile circuits, scan landscapes, optimize
//! angles, sweep sizes and fit the depolarizing model.

mod commands;
mod error;
mod measure;
mod output;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::measure::NoiseArgs;

#[derive(Debug, Parser)]
#[command(name = "qaoa", version, about = "QAOA workbench for SYC-native hardware", propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a problem instance
    Gen(GenArgs),
    /// Route and synthesize a QAOA circuit into PhX, Rz and SYC gates
    Compile(CompileArgs),
    /// Scan <C>/C_min over a (gamma, beta) grid at p = 1
    Landscape(LandscapeArgs),
    /// Run model gradient descent on the measured objective
    Optimize(OptimizeArgs),
    /// Optimal-angle ratios over families, sizes, depths and seeds
    Sweep(SweepArgs),
    /// Fit log f_c = n log f + log f0 to a records file
    FitNoise(FitNoiseArgs),
    /// Estimate per-qubit readout flip probabilities
    CalibrateReadout(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// grid, sk or 3reg
    #[arg(long)]
    pub family: String,
    /// Number of qubits; grid instances default to the whole topology
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Grid layout: default23, RxC (e.g. 4x5) or a topology JSON file
    #[arg(long)]
    pub topology: Option<String>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct AngleArgs {
    /// Comma-separated gamma values, one per layer (e.g. pi/8,0.3)
    #[arg(long, allow_hyphen_values = true, value_parser = parse::angle_list)]
    pub gamma: Option<parse::Floats>,
    /// Comma-separated beta values, one per layer
    #[arg(long, allow_hyphen_values = true, value_parser = parse::angle_list)]
    pub beta: Option<parse::Floats>,
    /// Use noiseless optimal angles instead of --gamma/--beta
    #[arg(long, conflicts_with_all = ["gamma", "beta"])]
    pub optimal: bool,
    /// MGD evaluations per refinement run with --optimal
    #[arg(long, default_value_t = 400)]
    pub budget: usize,
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    #[command(flatten)]
    pub angles: AngleArgs,
    /// wesn, swap-network or greedy; defaults to the family's native choice
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct LandscapeArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// Points per axis
    #[arg(long, default_value_t = qaoa_core::optimizer::LANDSCAPE_RESOLUTION)]
    pub resolution: usize,
    #[arg(long, default_value = "0,pi/2", allow_hyphen_values = true, value_parser = parse::angle_range)]
    pub gamma_range: (f64, f64),
    #[arg(long, default_value = "-pi/4,pi/4", allow_hyphen_values = true, value_parser = parse::angle_range)]
    pub beta_range: (f64, f64),
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Print the best grid cell
    #[arg(long)]
    pub argmax: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    /// Start point gamma1..gammap,beta1..betap
    #[arg(long, allow_hyphen_values = true, value_parser = parse::angle_list)]
    pub x0: Option<parse::Floats>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub sample_radius: Option<f64>,
    #[arg(long)]
    pub sample_count: Option<usize>,
    #[arg(long)]
    pub rate_decay_exponent: Option<f64>,
    #[arg(long)]
    pub stability_constant: Option<f64>,
    #[arg(long)]
    pub radius_decay_exponent: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_evaluations: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated families
    #[arg(long, default_value = "grid")]
    pub families: String,
    /// Sizes, e.g. 3-11 or 4,6,8
    #[arg(long, value_parser = parse::int_list)]
    pub sizes: parse::Ints,
    #[arg(long, default_value_t = 3)]
    pub p_max: usize,
    /// Instance seeds, e.g. 1-10
    #[arg(long, default_value = "1-10", value_parser = parse::int_list)]
    pub seeds: parse::Ints,
    /// MGD evaluations per refinement run
    #[arg(long, default_value_t = 400)]
    pub budget: usize,
    /// Fidelity per SYC gate in the depolarizing surrogate
    #[arg(long, default_value_t = qaoa_core::simulator::DEVICE_TWO_QUBIT_FIDELITY)]
    pub two_qubit_fidelity: f64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitNoiseArgs {
    #[arg(long)]
    pub records: PathBuf,
    /// Keep only this family
    #[arg(long)]
    pub family: Option<String>,
    /// Keep only this depth
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub n: usize,
    /// Injected flip probability 0 -> 1, one value or one per qubit
    #[arg(long, default_value = "0", value_parser = parse::probabilities)]
    pub p0: parse::Floats,
    /// Injected flip probability 1 -> 0, one value or one per qubit
    #[arg(long, default_value = "0", value_parser = parse::probabilities)]
    pub p1: parse::Floats,
    /// Shots per prepared state
    #[arg(long, default_value_t = qaoa_core::mitigation::DEFAULT_CALIBRATION_SHOTS)]
    pub shots: usize,
    /// Measure half the shots behind an X layer and flip them back
    #[arg(long)]
    pub symmetrized: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Compile(a) => commands::compile(a),
        Command::Landscape(a) => commands::landscape(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::FitNoise(a) => commands::fit_noise(a),
        Command::CalibrateReadout(a) => commands::calibrate_readout(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
