//! Readout-error calibration and correction of `Z` / `ZZ` observables.
//!
//! A flip channel with rates `p0` (0→1) and `p1` (1→0) acts on a measured
//! `Z̃` as `E[Z̃] = a + b·Z` with `a = p1 - p0` and `b = 1 - p0 - p1`. The
//! corrections below invert that map exactly in expectation; nothing is
//! clamped.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::problems::ProblemGraph;
use crate::simulator::{apply_readout_noise, mean_and_stderr, sample_noisy, sampled_expectation_c, NoiseModel, Statevector};

/// Calibration shots per prepared state and qubit by default.
pub const DEFAULT_CALIBRATION_SHOTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutCalibration {
    pub p0: Vec<f64>,
    pub p1: Vec<f64>,
    #[serde(rename = "shots")]
    pub shots_used: usize,
}

impl ReadoutCalibration {
    pub fn n_qubits(&self) -> usize {
        self.p0.len()
    }

    /// `(a, b)` of qubit `q`, or an error when `p0 + p1 >= 1`.
    fn affine(&self, q: usize) -> Result<(f64, f64)> {
        let (p0, p1) = (self.p0[q], self.p1[q]);
        if p0 + p1 >= 1.0 {
            return Err(Error::IllPosedCorrection { qubit: q, sum: p0 + p1 });
        }
        Ok((p1 - p0, 1.0 - p0 - p1))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        if c.p0.len() != c.p1.len() {
            return Err(Error::Dimension { expected: c.p0.len(), got: c.p1.len() });
        }
        Ok(c)
    }
}

/// Flip rates from shot archives of `|0…0⟩` and `|1…1⟩` preparations.
pub fn estimate_flip_probs(zero_shots: &[u64], one_shots: &[u64], n: usize) -> Result<ReadoutCalibration> {
    if zero_shots.is_empty() || one_shots.is_empty() {
        return Err(Error::Invalid("calibration needs at least one shot per state".into()));
    }
    let frac = |shots: &[u64], q: usize, want: u64| {
        shots.iter().filter(|&&b| (b >> q) & 1 == want).count() as f64 / shots.len() as f64
    };
    Ok(ReadoutCalibration {
        p0: (0..n).map(|q| frac(zero_shots, q, 1)).collect(),
        p1: (0..n).map(|q| frac(one_shots, q, 0)).collect(),
        shots_used: zero_shots.len().min(one_shots.len()),
    })
}

/// Runs the calibration experiment against a simulated readout channel.
pub fn calibrate<R: RngCore + ?Sized>(noise: &NoiseModel, shots: usize, rng: &mut R) -> Result<ReadoutCalibration> {
    let n = noise.n_qubits();
    if shots == 0 {
        return Err(Error::Invalid("calibration needs at least one shot".into()));
    }
    let ones = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
    let zero = apply_readout_noise(&vec![0; shots], noise, rng);
    let one = apply_readout_noise(&vec![ones; shots], noise, rng);
    estimate_flip_probs(&zero, &one, n)
}

/// Raw single- and two-qubit marginals needed by the correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawZz {
    pub zz: f64,
    pub zi: f64,
    pub zj: f64,
}

/// Corrected `⟨Z_i Z_j⟩`. Symmetrized data has `a = 0`, so only the scale
/// `b_i b_j` is undone and the marginals are ignored.
pub fn corrected_zz(raw: RawZz, cal: &ReadoutCalibration, i: usize, j: usize, symmetrized: bool) -> Result<f64> {
    let (ai, bi) = cal.affine(i)?;
    let (aj, bj) = cal.affine(j)?;
    if symmetrized {
        return Ok(raw.zz / (bi * bj));
    }
    Ok((raw.zz - aj * raw.zi - ai * raw.zj + ai * aj) / (bi * bj))
}

/// Plain copy and a copy with an `X` layer in front of the measurement.
/// Results of the second must have every bit flipped back
/// (see [`unflip`]).
pub fn symmetrize_measurement(circuit: &Circuit) -> Result<(Circuit, Circuit)> {
    if !circuit.is_measured() {
        return Err(Error::Structural("circuit has no measurement layer".into()));
    }
    let moments = circuit.moments();
    let (body, last) = moments.split_at(moments.len() - 1);
    let mut flipped = Circuit::new(circuit.n_qubits());
    for m in body {
        flipped.push_moment(m.clone())?;
    }
    flipped.push_moment(last[0].iter().map(|g| Gate::one(GateKind::X, g.qubits()[0])).collect())?;
    flipped.push_moment(last[0].clone())?;
    flipped.set_final_permutation(circuit.final_permutation().to_vec())?;
    Ok((circuit.clone(), flipped))
}

pub fn unflip(bits: &[u64], n: usize) -> Vec<u64> {
    let mask = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
    bits.iter().map(|b| b ^ mask).collect()
}

#[inline]
fn spin(bits: u64, q: usize) -> f64 {
    if (bits >> q) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn raw_zz(bits: &[u64], i: usize, j: usize) -> RawZz {
    let n = bits.len().max(1) as f64;
    RawZz {
        zz: bits.iter().map(|&b| spin(b, i) * spin(b, j)).sum::<f64>() / n,
        zi: bits.iter().map(|&b| spin(b, i)).sum::<f64>() / n,
        zj: bits.iter().map(|&b| spin(b, j)).sum::<f64>() / n,
    }
}

/// Corrected `⟨C⟩` from a shot archive and its standard error. The
/// correction is affine in each shot's spins, so the per-shot corrected cost
/// is an unbiased sample whose spread gives the error bar.
pub fn corrected_expectation_c(
    bits: &[u64],
    graph: &ProblemGraph,
    cal: &ReadoutCalibration,
    symmetrized: bool,
) -> Result<(f64, f64)> {
    if cal.n_qubits() < graph.n() {
        return Err(Error::Dimension { expected: graph.n(), got: cal.n_qubits() });
    }
    let terms: Vec<(usize, usize, f64, f64, f64, f64, f64)> = graph
        .edges()
        .iter()
        .map(|e| {
            let (ai, bi) = cal.affine(e.j)?;
            let (aj, bj) = cal.affine(e.k)?;
            let (ai, aj) = if symmetrized { (0.0, 0.0) } else { (ai, aj) };
            Ok((e.j, e.k, e.w as f64, ai, aj, bi, bj))
        })
        .collect::<Result<_>>()?;
    let per_shot: Vec<f64> = bits
        .iter()
        .map(|&b| {
            terms
                .iter()
                .map(|&(j, k, w, ai, aj, bi, bj)| {
                    let (zj, zk) = (spin(b, j), spin(b, k));
                    w * (zj * zk - aj * zj - ai * zk + ai * aj) / (bi * bj)
                })
                .sum()
        })
        .collect();
    Ok(mean_and_stderr(&per_shot))
}

/// How sampled `⟨C⟩` estimates treat readout error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutMode {
    /// Raw shot averages.
    Raw,
    /// Plain measurement with the affine correction.
    Corrected,
    /// Half the shots behind an X layer, flipped back, then rescaled.
    Symmetrized,
}

impl ReadoutMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "raw" | "none" => Ok(ReadoutMode::Raw),
            "corrected" | "plain" => Ok(ReadoutMode::Corrected),
            "symmetrized" => Ok(ReadoutMode::Symmetrized),
            other => Err(Error::Invalid(format!("unknown readout mode {other:?}"))),
        }
    }
}

/// Shot estimate of `⟨C⟩` and its standard error for `state` measured
/// through `noise`. `cal` is required unless `mode` is [`ReadoutMode::Raw`].
pub fn measured_expectation_c<R: RngCore + ?Sized>(
    state: &Statevector,
    graph: &ProblemGraph,
    shots: usize,
    noise: &NoiseModel,
    mode: ReadoutMode,
    cal: Option<&ReadoutCalibration>,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if shots == 0 {
        return Err(Error::Invalid("sampling needs at least one shot".into()));
    }
    let needs_cal = || cal.ok_or_else(|| Error::Invalid("readout correction needs a calibration".into()));
    match mode {
        ReadoutMode::Raw => Ok(sampled_expectation_c(&sample_noisy(state, shots, noise, rng)?, graph)),
        ReadoutMode::Corrected => {
            let cal = needs_cal()?;
            corrected_expectation_c(&sample_noisy(state, shots, noise, rng)?, graph, cal, false)
        }
        ReadoutMode::Symmetrized => {
            let cal = needs_cal()?;
            let n = state.n_qubits();
            let mask = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
            let amps = state.amplitudes();
            let flipped = Statevector::from_amplitudes(n, (0..amps.len()).map(|i| amps[i ^ mask as usize]).collect())?;
            let mut bits = sample_noisy(state, shots / 2, noise, rng)?;
            bits.extend(unflip(&sample_noisy(&flipped, shots - shots / 2, noise, rng)?, n));
            corrected_expectation_c(&bits, graph, cal, true)
        }
    }
}
