//! Dense statevector simulation.
//!
//! Amplitude index bit `i` is qubit `i`. Gate kernels walk the state in
//! strided blocks so that the pairs (or quadruples) an operation mixes sit in
//! disjoint chunks, which are then processed in parallel.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::circuit::{gate_unitary, Circuit, Gate, GateKind, GateUnitary, Mat2, Mat4, C64};
use crate::error::{Error, Result};
use crate::par;
use crate::problems::{cost_table, ProblemGraph};
use crate::rng;
use crate::routing::QaoaParams;

/// Largest register the simulator will allocate (1 GiB of amplitudes).
pub const MAX_SIM_QUBITS: usize = 26;

/// Per-qubit readout fidelity used by [`NoiseModel::device_defaults`].
pub const DEVICE_READOUT_FIDELITY: f64 = 0.959;
/// Two-qubit gate fidelity used by the depolarizing surrogate.
pub const DEVICE_TWO_QUBIT_FIDELITY: f64 = 0.994;

const PAR_BLOCKS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n: usize,
    amps: Vec<C64>,
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_SIM_QUBITS {
        return Err(Error::Resource(format!("{n} qubits exceed the {MAX_SIM_QUBITS}-qubit simulator bound")));
    }
    Ok(())
}

impl Statevector {
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, bits: u64) -> Result<Self> {
        check_size(n)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        let idx = bits as usize;
        if idx >= amps.len() {
            return Err(Error::Invalid(format!("basis index {bits} out of range for {n} qubits")));
        }
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Statevector { n, amps })
    }

    /// `|+⟩^n`.
    pub fn uniform(n: usize) -> Result<Self> {
        check_size(n)?;
        let a = C64::new(((1u64 << n) as f64).sqrt().recip(), 0.0);
        Ok(Statevector { n, amps: vec![a; 1 << n] })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self> {
        check_size(n)?;
        if amps.len() != 1 << n {
            return Err(Error::Dimension { expected: 1 << n, got: amps.len() });
        }
        Ok(Statevector { n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        par::sum_indexed(self.amps.len(), |i| self.amps[i].norm_sqr())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply_1q(&mut self, q: usize, m: &Mat2) {
        let (m00, m01, m10, m11) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let kernel = |lo: &mut [C64], hi: &mut [C64]| {
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = m00 * a + m01 * b;
                *y = m10 * a + m11 * b;
            }
        };
        let stride = 1usize << q;
        let block = stride << 1;
        if self.amps.len() / block >= PAR_BLOCKS {
            par::for_each_chunk(&mut self.amps, block, |c| {
                let (lo, hi) = c.split_at_mut(stride);
                kernel(lo, hi);
            });
        } else {
            for c in self.amps.chunks_mut(block) {
                let (lo, hi) = c.split_at_mut(stride);
                par::zip_chunks(lo, hi, stride.min(4096), kernel);
            }
        }
    }

    /// `m` is indexed by `2·bit(a) + bit(b)`.
    pub fn apply_2q(&mut self, a: usize, b: usize, m: &Mat4) {
        let (hi, lo) = if a > b { (a, b) } else { (b, a) };
        // Reorder to (hi, lo) bit order.
        let m = if a == hi {
            *m
        } else {
            let p = [0usize, 2, 1, 3];
            Mat4::from_fn(|r, c| m[(p[r], p[c])])
        };
        let lstride = 1usize << lo;
        let kernel = |h0: &mut [C64], h1: &mut [C64]| {
            let mut base = 0;
            while base < h0.len() {
                for i in base..base + lstride {
                    let j = i + lstride;
                    let v = [h0[i], h0[j], h1[i], h1[j]];
                    let out: [C64; 4] = std::array::from_fn(|r| {
                        m[(r, 0)] * v[0] + m[(r, 1)] * v[1] + m[(r, 2)] * v[2] + m[(r, 3)] * v[3]
                    });
                    h0[i] = out[0];
                    h0[j] = out[1];
                    h1[i] = out[2];
                    h1[j] = out[3];
                }
                base += 2 * lstride;
            }
        };
        let hstride = 1usize << hi;
        let block = hstride << 1;
        if self.amps.len() / block >= PAR_BLOCKS {
            par::for_each_chunk(&mut self.amps, block, |c| {
                let (h0, h1) = c.split_at_mut(hstride);
                kernel(h0, h1);
            });
        } else {
            let chunk = (2 * lstride).max(4096.min(hstride));
            for c in self.amps.chunks_mut(block) {
                let (h0, h1) = c.split_at_mut(hstride);
                par::zip_chunks(h0, h1, chunk, kernel);
            }
        }
    }

    pub fn apply_gate(&mut self, g: &Gate) -> Result<()> {
        if g.qubits().iter().any(|&q| q >= self.n) {
            return Err(Error::Dimension { expected: self.n, got: g.qubits().iter().max().copied().unwrap_or(0) + 1 });
        }
        match (g.kind(), gate_unitary(g.kind())) {
            (GateKind::Measure, _) => {}
            (_, GateUnitary::One(m)) => self.apply_1q(g.qubits()[0], &m),
            (_, GateUnitary::Two(m)) => self.apply_2q(g.qubits()[0], g.qubits()[1], &m),
        }
        Ok(())
    }

    /// Multiplies amplitude `z` by `exp(-i·scale·diag[z])`.
    pub fn apply_diagonal_phase(&mut self, diag: &[f64], scale: f64) -> Result<()> {
        if diag.len() != self.amps.len() {
            return Err(Error::Dimension { expected: self.amps.len(), got: diag.len() });
        }
        par::for_each_indexed(&mut self.amps, |i, a| *a *= C64::from_polar(1.0, -scale * diag[i]));
        Ok(())
    }

    /// State re-indexed so that logical qubit `l` is the bit held by
    /// `perm[l]` here.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Statevector> {
        if perm.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: perm.len() });
        }
        let mut amps = vec![C64::new(0.0, 0.0); self.amps.len()];
        par::for_each_indexed(&mut amps, |logical, a| {
            let mut phys = 0usize;
            for (l, &p) in perm.iter().enumerate() {
                phys |= ((logical >> l) & 1) << p;
            }
            *a = self.amps[phys];
        });
        Ok(Statevector { n: self.n, amps })
    }
}

/// Runs every moment of `circuit` (measurements are no-ops) on `initial`, or
/// on `|0…0⟩` when none is given.
pub fn evolve(circuit: &Circuit, initial: Option<Statevector>) -> Result<Statevector> {
    let n = circuit.n_qubits();
    check_size(n)?;
    let mut s = match initial {
        Some(s) if s.n != n => return Err(Error::Dimension { expected: n, got: s.n }),
        Some(s) => s,
        None => Statevector::zero(n)?,
    };
    for g in circuit.gates() {
        s.apply_gate(g)?;
    }
    Ok(s)
}

/// Exact QAOA evolution with a precomputed diagonal cost table, for repeated
/// evaluation over many angle settings.
#[derive(Debug, Clone)]
pub struct QaoaSimulator {
    n: usize,
    costs: Vec<f64>,
}

impl QaoaSimulator {
    pub fn new(graph: &ProblemGraph) -> Result<Self> {
        check_size(graph.n())?;
        Ok(QaoaSimulator { n: graph.n(), costs: cost_table(graph) })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn state(&self, params: &QaoaParams) -> Result<Statevector> {
        let mut s = Statevector::uniform(self.n)?;
        for (&gamma, &beta) in params.gamma.iter().zip(&params.beta) {
            s.apply_diagonal_phase(&self.costs, gamma)?;
            let (sn, cs) = beta.sin_cos();
            let rx = Mat2::new(C64::new(cs, 0.0), C64::new(0.0, -sn), C64::new(0.0, -sn), C64::new(cs, 0.0));
            for q in 0..self.n {
                s.apply_1q(q, &rx);
            }
        }
        Ok(s)
    }

    /// `⟨γ,β|C|γ,β⟩`.
    ///
    /// A trailing cost phase with `β_p = 0` cannot change probabilities and is
    /// skipped. Since `Σ_z C(z) = 0` for a pure `ZZ` cost, the sum is taken
    /// over `p_z - p_0`, which makes a uniform distribution give exactly 0.
    pub fn expectation(&self, params: &QaoaParams) -> Result<f64> {
        let mut trimmed = params.clone();
        while trimmed.p() > 0 && trimmed.beta[trimmed.p() - 1] == 0.0 {
            trimmed.gamma.pop();
            trimmed.beta.pop();
        }
        let s = if trimmed.p() == 0 { Statevector::uniform(self.n)? } else { self.state(&trimmed)? };
        let p0 = s.amps[0].norm_sqr();
        Ok(par::sum_indexed(s.amps.len(), |i| (s.amps[i].norm_sqr() - p0) * self.costs[i]))
    }
}

pub fn qaoa_state(graph: &ProblemGraph, params: &QaoaParams) -> Result<Statevector> {
    QaoaSimulator::new(graph)?.state(params)
}

/// `Σ_z |a_z|² C(z)`, evaluating the cost per basis state on the fly.
pub fn expectation_c(state: &Statevector, graph: &ProblemGraph) -> Result<f64> {
    if state.n != graph.n() {
        return Err(Error::Dimension { expected: graph.n(), got: state.n });
    }
    Ok(par::sum_indexed(state.amps.len(), |i| state.amps[i].norm_sqr() * graph.cost_bits(i as u64) as f64))
}

pub fn expectation_z(state: &Statevector, i: usize) -> Result<f64> {
    if i >= state.n {
        return Err(Error::Dimension { expected: state.n, got: i + 1 });
    }
    Ok(par::sum_indexed(state.amps.len(), |z| {
        let s = if (z >> i) & 1 == 0 { 1.0 } else { -1.0 };
        s * state.amps[z].norm_sqr()
    }))
}

pub fn expectation_zz(state: &Statevector, i: usize, j: usize) -> Result<f64> {
    if i >= state.n || j >= state.n {
        return Err(Error::Dimension { expected: state.n, got: i.max(j) + 1 });
    }
    Ok(par::sum_indexed(state.amps.len(), |z| {
        let s = if ((z >> i) ^ (z >> j)) & 1 == 0 { 1.0 } else { -1.0 };
        s * state.amps[z].norm_sqr()
    }))
}

/// `shots` independent draws from `|a_z|²`, bit `i` of each draw is qubit `i`.
pub fn sample_bitstrings<R: RngCore + ?Sized>(state: &Statevector, shots: usize, rng: &mut R) -> Vec<u64> {
    let mut cdf = Vec::with_capacity(state.amps.len());
    let mut acc = 0.0;
    for a in &state.amps {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let last = cdf.len() - 1;
    (0..shots)
        .map(|_| {
            let u = rng::unit_f64(rng) * acc;
            cdf.partition_point(|&c| c <= u).min(last) as u64
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Probability of reading 1 for a qubit in `|0⟩`.
    pub readout_p0: Vec<f64>,
    /// Probability of reading 0 for a qubit in `|1⟩`.
    pub readout_p1: Vec<f64>,
    /// Global depolarizing fidelity `f_c`; `None` disables the channel.
    pub depolarizing_fidelity: Option<f64>,
}

impl NoiseModel {
    pub fn noiseless(n: usize) -> Self {
        NoiseModel { readout_p0: vec![0.0; n], readout_p1: vec![0.0; n], depolarizing_fidelity: None }
    }

    pub fn readout(n: usize, p0: f64, p1: f64) -> Result<Self> {
        let m = NoiseModel { readout_p0: vec![p0; n], readout_p1: vec![p1; n], depolarizing_fidelity: None };
        m.validate()?;
        Ok(m)
    }

    /// Symmetric readout flips at the device's per-qubit readout fidelity.
    pub fn device_defaults(n: usize) -> Self {
        let p = 1.0 - DEVICE_READOUT_FIDELITY;
        NoiseModel { readout_p0: vec![p; n], readout_p1: vec![p; n], depolarizing_fidelity: None }
    }

    pub fn n_qubits(&self) -> usize {
        self.readout_p0.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.readout_p0.len() != self.readout_p1.len() {
            return Err(Error::Dimension { expected: self.readout_p0.len(), got: self.readout_p1.len() });
        }
        for (q, (&p0, &p1)) in self.readout_p0.iter().zip(&self.readout_p1).enumerate() {
            if !(0.0..=1.0).contains(&p0) || !(0.0..=1.0).contains(&p1) {
                return Err(Error::Invalid(format!("readout probabilities of qubit {q} outside [0, 1]")));
            }
            if p0 + p1 >= 1.0 {
                return Err(Error::IllPosedCorrection { qubit: q, sum: p0 + p1 });
            }
        }
        if let Some(f) = self.depolarizing_fidelity {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Invalid(format!("depolarizing fidelity {f} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Flips each bit independently: `0 → 1` with `p0[q]`, `1 → 0` with `p1[q]`.
/// Probabilities are taken as given (no well-posedness check), so that
/// extreme channels can be simulated.
pub fn apply_readout_noise<R: RngCore + ?Sized>(bits: &[u64], noise: &NoiseModel, rng: &mut R) -> Vec<u64> {
    let n = noise.n_qubits();
    bits.iter()
        .map(|&b| {
            let mut out = b;
            for q in 0..n {
                let p = if (b >> q) & 1 == 0 { noise.readout_p0[q] } else { noise.readout_p1[q] };
                if p > 0.0 && rng::unit_f64(rng) < p {
                    out ^= 1 << q;
                }
            }
            out
        })
        .collect()
}

/// Shots from `state` under `noise`: with probability `1 - f_c` a shot is
/// replaced by a uniformly random bitstring (global depolarizing), then
/// readout flips are applied.
pub fn sample_noisy<R: RngCore + ?Sized>(
    state: &Statevector,
    shots: usize,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if noise.n_qubits() != state.n {
        return Err(Error::Dimension { expected: state.n, got: noise.n_qubits() });
    }
    noise.validate()?;
    let mut bits = sample_bitstrings(state, shots, rng);
    if let Some(f) = noise.depolarizing_fidelity.filter(|&f| f < 1.0) {
        let mask = if state.n >= 64 { u64::MAX } else { (1u64 << state.n) - 1 };
        for b in bits.iter_mut() {
            if rng::unit_f64(rng) >= f {
                *b = rng.next_u64() & mask;
            }
        }
    }
    Ok(apply_readout_noise(&bits, noise, rng))
}

/// `f_c · ⟨C⟩`: the cost under a global depolarizing channel, whose maximally
/// mixed part contributes `tr(C)/d = 0`.
pub fn depolarized_expectation(c_noiseless: f64, f_c: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f_c) {
        return Err(Error::Invalid(format!("depolarizing fidelity {f_c} outside [0, 1]")));
    }
    Ok(f_c * c_noiseless)
}

/// Mean cost over sampled bitstrings and its standard error.
pub fn sampled_expectation_c(bits: &[u64], graph: &ProblemGraph) -> (f64, f64) {
    let vals: Vec<f64> = bits.iter().map(|&b| graph.cost_bits(b) as f64).collect();
    mean_and_stderr(&vals)
}

pub(crate) fn mean_and_stderr(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    if vals.is_empty() {
        return (0.0, 0.0);
    }
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Bitstring with qubit 0 leftmost.
pub fn format_bitstring(bits: u64, n: usize) -> String {
    (0..n).map(|q| if (bits >> q) & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bitstring(s: &str) -> Result<u64> {
    s.chars().enumerate().try_fold(0u64, |acc, (q, ch)| match ch {
        '0' => Ok(acc),
        '1' => Ok(acc | 1 << q),
        other => Err(Error::Invalid(format!("bad bitstring character {other:?}"))),
    })
}

pub fn counts(bits: &[u64]) -> BTreeMap<u64, usize> {
    let mut m = BTreeMap::new();
    for &b in bits {
        *m.entry(b).or_insert(0) += 1;
    }
    m
}

/// Sampled-results CSV, `bitstring,count`, rows in ascending bitstring value.
pub fn counts_csv(bits: &[u64], n: usize) -> String {
    let mut out = String::from("bitstring,count\n");
    for (b, c) in counts(bits) {
        out.push_str(&format!("{},{c}\n", format_bitstring(b, n)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{circuit_unitary, phx_matrix, syc_matrix};
    use crate::problems::gen_sk;

    fn random_state(n: usize, seed: u64) -> Statevector {
        let mut r = rng::rng_from_seed(seed);
        let mut amps: Vec<C64> =
            (0..1 << n).map(|_| C64::new(rng::standard_normal(&mut r), rng::standard_normal(&mut r))).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        Statevector::from_amplitudes(n, amps).unwrap()
    }

    #[test]
    fn kernels_match_dense_unitary() {
        for (a, b) in [(0, 1), (1, 0), (0, 4), (4, 2), (3, 1)] {
            let mut c = Circuit::new(5);
            c.push_moment(vec![Gate::phx(a, 0.3, 1.1)]).unwrap();
            c.push_moment(vec![Gate::two(GateKind::ZzSwap(0.4), a, b)]).unwrap();
            c.push_moment(vec![Gate::syc(b, a), Gate::rz((0..5).find(|q| *q != a && *q != b).unwrap(), 0.7)]).unwrap();
            let s0 = random_state(5, 9);
            let got = evolve(&c, Some(s0.clone())).unwrap();
            let u = circuit_unitary(&c).unwrap();
            let v = nalgebra::DVector::from_column_slice(s0.amplitudes());
            let want = u * v;
            for (x, y) in got.amplitudes().iter().zip(want.iter()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn large_register_uses_parallel_paths() {
        let n = 16;
        let mut s = random_state(n, 2);
        let orig = s.clone();
        let m = phx_matrix(0.9, 0.2);
        s.apply_1q(n - 1, &m);
        s.apply_1q(n - 1, &m.adjoint());
        s.apply_2q(n - 1, 0, &syc_matrix());
        s.apply_2q(n - 1, 0, &syc_matrix().adjoint());
        s.apply_2q(3, n - 2, &syc_matrix());
        s.apply_2q(3, n - 2, &syc_matrix().adjoint());
        for (x, y) in s.amplitudes().iter().zip(orig.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn size_bound() {
        assert!(matches!(Statevector::zero(27), Err(Error::Resource(_))));
    }

    #[test]
    fn uniform_has_zero_cost() {
        let g = gen_sk(6, 3).unwrap();
        let s = Statevector::uniform(6).unwrap();
        assert!(expectation_c(&s, &g).unwrap().abs() < 1e-12);
        let b = Statevector::basis(6, 0b101101).unwrap();
        assert_eq!(expectation_c(&b, &g).unwrap(), g.cost_bits(0b101101) as f64);
    }

    #[test]
    fn relabel_moves_bits() {
        let s = Statevector::basis(3, 0b001).unwrap();
        // logical 0 lives on physical qubit 2
        let r = s.relabeled(&[2, 1, 0]).unwrap();
        assert_eq!(r.amplitudes()[0b100].re, 1.0);
    }

    #[test]
    fn bitstring_format() {
        assert_eq!(format_bitstring(0b011, 4), "1100");
        assert_eq!(parse_bitstring("1100").unwrap(), 0b011);
        assert_eq!(counts_csv(&[1, 1, 0], 2), "bitstring,count\n00,1\n10,2\n");
    }

    #[test]
    fn readout_extremes() {
        let mut r = rng::rng_from_seed(1);
        let noise = NoiseModel { readout_p0: vec![1.0; 3], readout_p1: vec![0.0; 3], depolarizing_fidelity: None };
        assert!(noise.validate().is_err());
        assert_eq!(apply_readout_noise(&[0, 0], &noise, &mut r), vec![7, 7]);
        let clean = NoiseModel::noiseless(3);
        assert_eq!(apply_readout_noise(&[5, 2], &clean, &mut r), vec![5, 2]);
    }

    #[test]
    fn depolarized_examples() {
        assert_eq!(depolarized_expectation(-6.0, 1.0).unwrap(), -6.0);
        assert_eq!(depolarized_expectation(-6.0, 0.0).unwrap(), 0.0);
        assert_eq!(depolarized_expectation(-6.0, 0.5).unwrap(), -3.0);
        assert!(depolarized_expectation(-6.0, 1.5).is_err());
    }
}
