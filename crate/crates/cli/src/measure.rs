//! Exact or shot-based ratio estimates shared by `landscape` and `optimize`.

use std::path::PathBuf;

use clap::Args;
use qaoa_core::mitigation::{calibrate, measured_expectation_c, ReadoutCalibration, ReadoutMode, DEFAULT_CALIBRATION_SHOTS};
use qaoa_core::optimizer::RatioObjective;
use qaoa_core::problems::ProblemGraph;
use qaoa_core::rng::{self, WorkbenchRng};
use qaoa_core::routing::QaoaParams;
use qaoa_core::simulator::NoiseModel;

use crate::error::CliError;
use crate::output;
use crate::parse;

const CALIBRATION_TAG: u64 = 0x4341_4c;

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    /// Estimate from shots instead of the exact expectation
    #[arg(long)]
    pub sampled: bool,
    /// Shots per estimate in sampled mode
    #[arg(long)]
    pub shots: Option<usize>,
    /// Readout flip probability 0 -> 1, one value or one per qubit
    #[arg(long, value_parser = parse::probabilities)]
    pub readout_p0: Option<parse::Floats>,
    /// Readout flip probability 1 -> 0, one value or one per qubit
    #[arg(long, value_parser = parse::probabilities)]
    pub readout_p1: Option<parse::Floats>,
    /// Global depolarizing fidelity applied to every estimate
    #[arg(long)]
    pub depolarizing: Option<f64>,
    /// Readout treatment in sampled mode: raw, corrected or symmetrized
    #[arg(long, default_value = "symmetrized", value_parser = parse_mode)]
    pub readout: ReadoutMode,
    /// Calibration JSON written by `calibrate-readout`; measured on the fly when absent
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Shots per prepared state for an on-the-fly calibration
    #[arg(long, default_value_t = DEFAULT_CALIBRATION_SHOTS)]
    pub calibration_shots: usize,
}

fn parse_mode(s: &str) -> Result<ReadoutMode, String> {
    ReadoutMode::parse(s).map_err(|e| e.to_string())
}

fn per_qubit(v: &Option<Vec<f64>>, n: usize, flag: &str) -> Result<Vec<f64>, CliError> {
    match v.as_deref() {
        None => Ok(vec![0.0; n]),
        Some([p]) => Ok(vec![*p; n]),
        Some(ps) if ps.len() == n => Ok(ps.to_vec()),
        Some(ps) => Err(CliError::usage(format!("--{flag} has {} values for {n} qubits", ps.len()))),
    }
}

pub fn noise_model(p0: &Option<Vec<f64>>, p1: &Option<Vec<f64>>, fidelity: Option<f64>, n: usize) -> Result<NoiseModel, CliError> {
    let noise = NoiseModel {
        readout_p0: per_qubit(p0, n, "readout-p0")?,
        readout_p1: per_qubit(p1, n, "readout-p1")?,
        depolarizing_fidelity: fidelity,
    };
    noise.validate()?;
    Ok(noise)
}

pub struct Estimator {
    objective: RatioObjective,
    graph: ProblemGraph,
    shots: Option<usize>,
    noise: NoiseModel,
    mode: ReadoutMode,
    calibration: Option<ReadoutCalibration>,
}

impl Estimator {
    pub fn new(graph: &ProblemGraph, args: &NoiseArgs, default_shots: usize, seed: u64) -> Result<Self, CliError> {
        let n = graph.n();
        let noise = noise_model(&args.readout_p0, &args.readout_p1, args.depolarizing, n)?;
        let has_readout = args.readout_p0.is_some() || args.readout_p1.is_some();
        if !args.sampled && (has_readout || args.shots.is_some()) {
            return Err(CliError::usage("readout noise and --shots need --sampled"));
        }
        let shots = args.sampled.then(|| args.shots.unwrap_or(default_shots));
        if shots == Some(0) {
            return Err(CliError::usage("--shots must be positive"));
        }
        let calibration = match (shots, args.readout) {
            (None, _) | (_, ReadoutMode::Raw) => None,
            (Some(_), _) => Some(match &args.calibration {
                Some(path) => {
                    let cal = ReadoutCalibration::from_json(&output::read(path)?)?;
                    if cal.n_qubits() != n {
                        return Err(CliError::usage(format!("calibration covers {} qubits, problem has {n}", cal.n_qubits())));
                    }
                    cal
                }
                None => {
                    let mut r = rng::stream(CALIBRATION_TAG, 0, seed);
                    calibrate(&NoiseModel { depolarizing_fidelity: None, ..noise.clone() }, args.calibration_shots, &mut r)?
                }
            }),
        };
        Ok(Estimator {
            objective: RatioObjective::new(graph)?,
            graph: graph.clone(),
            shots,
            noise,
            mode: args.readout,
            calibration,
        })
    }

    pub fn c_min(&self) -> f64 {
        self.objective.c_min()
    }

    pub fn describe(&self) -> String {
        match self.shots {
            None => "exact".into(),
            Some(s) => format!("sampled, {s} shots, readout {:?}", self.mode).to_lowercase(),
        }
    }

    /// Noiseless `⟨C⟩ / C_min`.
    pub fn exact_ratio(&self, params: &QaoaParams) -> Result<f64, CliError> {
        Ok(self.objective.ratio(params)?)
    }

    /// `⟨C⟩ / C_min` as the configured experiment would report it.
    pub fn ratio(&self, params: &QaoaParams, rng: &mut WorkbenchRng) -> Result<f64, CliError> {
        let f = self.noise.depolarizing_fidelity.unwrap_or(1.0);
        let Some(shots) = self.shots else {
            return Ok(f * self.objective.ratio(params)?);
        };
        let state = self.objective.simulator().state(params)?;
        let (mean, _) = measured_expectation_c(
            &state,
            &self.graph,
            shots,
            &self.noise,
            self.mode,
            self.calibration.as_ref(),
            rng,
        )?;
        Ok(mean / self.c_min())
    }

    pub fn ratio_vec(&self, x: &[f64], rng: &mut WorkbenchRng) -> f64 {
        QaoaParams::from_slice(x).map_err(CliError::from).and_then(|p| self.ratio(&p, rng)).unwrap_or(f64::NAN)
    }
}
