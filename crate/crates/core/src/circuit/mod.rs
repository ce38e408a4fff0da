//! Gates, circuits and their exact unitaries.
//!
//! Conventions used throughout the crate:
//! * `Rz(t) = exp(-i t Z / 2)`, `Rx(t) = exp(-i t X / 2)`.
//! * `PhX(t, p) = Rz(p) Rx(t) Rz(-p)`: a rotation by `t` about the axis at
//!   angle `p` in the X-Y plane; `PhX(t, 0) = Rx(t)`.
//! * `ZZ(a) = exp(-i a Z⊗Z)`, `ZZSwap(a) = ZZ(a) · SWAP`.
//! * `SYC = fSim(π/2, π/6)`, with
//!   `fSim(θ, φ) = [[1,0,0,0],[0,cos θ,-i sin θ,0],[0,-i sin θ,cos θ,0],[0,0,0,e^{-iφ}]]`.
//! * A two-qubit matrix acting on `qubits = [a, b]` is indexed by
//!   `2·bit(a) + bit(b)`, i.e. the first listed qubit is the high bit.
//! * Global phase is never tracked; compare unitaries with
//!   [`phase_invariant_distance`].

pub mod kak;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

/// Dense circuit unitaries are built only up to this width.
pub const MAX_DENSE_QUBITS: usize = 12;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    PhX { theta: f64, phi: f64 },
    Rz(f64),
    Syc,
    /// Full exponent: `ZZ(a) = exp(-i a Z⊗Z)`.
    Zz(f64),
    Swap,
    ZzSwap(f64),
    H,
    X,
    Measure,
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Syc | GateKind::Zz(_) | GateKind::Swap | GateKind::ZzSwap(_) => 2,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::PhX { .. } => "phx",
            GateKind::Rz(_) => "rz",
            GateKind::Syc => "syc",
            GateKind::Zz(_) => "zz",
            GateKind::Swap => "swap",
            GateKind::ZzSwap(_) => "zzswap",
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Measure => "measure",
        }
    }

    fn args(&self) -> Vec<f64> {
        match *self {
            GateKind::PhX { theta, phi } => vec![theta, phi],
            GateKind::Rz(a) | GateKind::Zz(a) | GateKind::ZzSwap(a) => vec![a],
            _ => Vec::new(),
        }
    }

    fn from_parts(name: &str, args: &[f64]) -> Result<Self> {
        let want = |k: usize| -> Result<()> {
            if args.len() == k {
                Ok(())
            } else {
                Err(Error::Invalid(format!("gate {name} takes {k} args, got {}", args.len())))
            }
        };
        let kind = match name {
            "phx" => {
                want(2)?;
                GateKind::PhX { theta: args[0], phi: args[1] }
            }
            "rz" => {
                want(1)?;
                GateKind::Rz(args[0])
            }
            "zz" => {
                want(1)?;
                GateKind::Zz(args[0])
            }
            "zzswap" => {
                want(1)?;
                GateKind::ZzSwap(args[0])
            }
            "syc" | "swap" | "h" | "x" | "measure" => {
                want(0)?;
                match name {
                    "syc" => GateKind::Syc,
                    "swap" => GateKind::Swap,
                    "h" => GateKind::H,
                    "x" => GateKind::X,
                    _ => GateKind::Measure,
                }
            }
            other => return Err(Error::Invalid(format!("unknown gate kind {other:?}"))),
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GateFile", into = "GateFile")]
pub struct Gate {
    kind: GateKind,
    qubits: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct GateFile {
    kind: String,
    qubits: Vec<usize>,
    args: Vec<f64>,
}

impl TryFrom<GateFile> for Gate {
    type Error = Error;
    fn try_from(f: GateFile) -> Result<Self> {
        Gate::new(GateKind::from_parts(&f.kind, &f.args)?, f.qubits)
    }
}

impl From<Gate> for GateFile {
    fn from(g: Gate) -> Self {
        GateFile { kind: g.kind.name().to_string(), qubits: g.qubits, args: g.kind.args() }
    }
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>) -> Result<Self> {
        if qubits.len() != kind.arity() {
            return Err(Error::Invalid(format!(
                "{} acts on {} qubits, got {}",
                kind.name(),
                kind.arity(),
                qubits.len()
            )));
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::Invalid(format!("{} on repeated qubit {}", kind.name(), qubits[0])));
        }
        Ok(Gate { kind, qubits })
    }

    pub fn one(kind: GateKind, q: usize) -> Self {
        Self::new(kind, vec![q]).expect("single-qubit gate")
    }

    pub fn two(kind: GateKind, a: usize, b: usize) -> Self {
        Self::new(kind, vec![a, b]).expect("two-qubit gate on distinct qubits")
    }

    pub fn phx(q: usize, theta: f64, phi: f64) -> Self {
        Self::one(GateKind::PhX { theta, phi }, q)
    }

    pub fn rz(q: usize, angle: f64) -> Self {
        Self::one(GateKind::Rz(angle), q)
    }

    pub fn syc(a: usize, b: usize) -> Self {
        Self::two(GateKind::Syc, a, b)
    }

    pub fn kind(&self) -> &GateKind {
        &self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits.len() == 2
    }

    /// Same gate relabelled through `map[old] = new`.
    pub fn remapped(&self, map: &[usize]) -> Self {
        Gate { kind: self.kind, qubits: self.qubits.iter().map(|&q| map[q]).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateUnitary {
    One(Mat2),
    Two(Mat4),
}

pub fn rz_matrix(t: f64) -> Mat2 {
    Mat2::new(C64::from_polar(1.0, -t / 2.0), ZERO, ZERO, C64::from_polar(1.0, t / 2.0))
}

pub fn rx_matrix(t: f64) -> Mat2 {
    let (s, c) = (t / 2.0).sin_cos();
    Mat2::new(C64::new(c, 0.0), C64::new(0.0, -s), C64::new(0.0, -s), C64::new(c, 0.0))
}

pub fn phx_matrix(theta: f64, phi: f64) -> Mat2 {
    rz_matrix(phi) * rx_matrix(theta) * rz_matrix(-phi)
}

pub fn pauli(k: usize) -> Mat2 {
    match k {
        0 => Mat2::identity(),
        1 => Mat2::new(ZERO, ONE, ONE, ZERO),
        2 => Mat2::new(ZERO, -I, I, ZERO),
        3 => Mat2::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("pauli index {k} out of range"),
    }
}

pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

pub fn fsim_matrix(theta: f64, phi: f64) -> Mat4 {
    let (s, c) = theta.sin_cos();
    let mut m = Mat4::zeros();
    m[(0, 0)] = ONE;
    m[(1, 1)] = C64::new(c, 0.0);
    m[(1, 2)] = C64::new(0.0, -s);
    m[(2, 1)] = C64::new(0.0, -s);
    m[(2, 2)] = C64::new(c, 0.0);
    m[(3, 3)] = C64::from_polar(1.0, -phi);
    m
}

pub fn syc_matrix() -> Mat4 {
    fsim_matrix(PI / 2.0, PI / 6.0)
}

pub fn zz_matrix(a: f64) -> Mat4 {
    let m = C64::from_polar(1.0, -a);
    let p = C64::from_polar(1.0, a);
    Mat4::from_diagonal(&nalgebra::Vector4::new(m, p, p, m))
}

pub fn swap_matrix() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = ONE;
    m[(1, 2)] = ONE;
    m[(2, 1)] = ONE;
    m[(3, 3)] = ONE;
    m
}

pub fn hadamard_matrix() -> Mat2 {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    Mat2::new(h, h, h, -h)
}

/// Exact unitary of a gate. `Measure` has no unitary action and maps to the
/// identity.
pub fn gate_unitary(kind: &GateKind) -> GateUnitary {
    match *kind {
        GateKind::PhX { theta, phi } => GateUnitary::One(phx_matrix(theta, phi)),
        GateKind::Rz(t) => GateUnitary::One(rz_matrix(t)),
        GateKind::H => GateUnitary::One(hadamard_matrix()),
        GateKind::X => GateUnitary::One(pauli(1)),
        GateKind::Measure => GateUnitary::One(Mat2::identity()),
        GateKind::Syc => GateUnitary::Two(syc_matrix()),
        GateKind::Zz(a) => GateUnitary::Two(zz_matrix(a)),
        GateKind::Swap => GateUnitary::Two(swap_matrix()),
        GateKind::ZzSwap(a) => GateUnitary::Two(zz_matrix(a) * swap_matrix()),
    }
}

/// `sqrt(1 - |tr(U†V)| / d)`: zero iff `U = e^{iα} V`.
///
/// Evaluated as `‖e^{iα}U - V‖_F / sqrt(2d)` with `α = arg tr(U†V)`, which is
/// the same quantity for unitary inputs without the cancellation in `1 - x`.
pub fn phase_invariant_distance(u: &DMatrix<C64>, v: &DMatrix<C64>) -> Result<f64> {
    if u.shape() != v.shape() || u.nrows() != u.ncols() {
        return Err(Error::Dimension { expected: u.nrows(), got: v.nrows() });
    }
    Ok(aligned_distance(u.as_slice(), v.as_slice(), u.nrows()))
}

pub fn distance4(u: &Mat4, v: &Mat4) -> f64 {
    aligned_distance(u.as_slice(), v.as_slice(), 4)
}

pub fn distance2(u: &Mat2, v: &Mat2) -> f64 {
    aligned_distance(u.as_slice(), v.as_slice(), 2)
}

fn aligned_distance(u: &[C64], v: &[C64], d: usize) -> f64 {
    let tr: C64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
    let phase = if tr.norm() > 0.0 { tr / tr.norm() } else { ONE };
    let sq: f64 = u.iter().zip(v).map(|(a, b)| (a * phase - b).norm_sqr()).sum();
    (sq / (2.0 * d as f64)).min(1.0).sqrt()
}

/// Largest entry of `|U†U - I|`.
pub fn unitarity_error(u: &DMatrix<C64>) -> f64 {
    let prod = u.adjoint() * u;
    let id = DMatrix::<C64>::identity(u.nrows(), u.ncols());
    (prod - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Ordered moments of gates on pairwise-disjoint qubits, plus the final
/// logical → physical placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitFile", into = "CircuitFile")]
pub struct Circuit {
    n_qubits: usize,
    moments: Vec<Vec<Gate>>,
    final_permutation: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct CircuitFile {
    pub n: usize,
    pub moments: Vec<Vec<Gate>>,
    pub perm: Vec<usize>,
}

impl TryFrom<CircuitFile> for Circuit {
    type Error = Error;
    fn try_from(f: CircuitFile) -> Result<Self> {
        let mut c = Circuit::new(f.n);
        for m in f.moments {
            c.push_moment(m)?;
        }
        c.set_final_permutation(f.perm)?;
        Ok(c)
    }
}

impl From<Circuit> for CircuitFile {
    fn from(c: Circuit) -> Self {
        CircuitFile { n: c.n_qubits, moments: c.moments, perm: c.final_permutation }
    }
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit { n_qubits, moments: Vec::new(), final_permutation: (0..n_qubits).collect() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn moments(&self) -> &[Vec<Gate>] {
        &self.moments
    }

    pub fn final_permutation(&self) -> &[usize] {
        &self.final_permutation
    }

    pub fn set_final_permutation(&mut self, perm: Vec<usize>) -> Result<()> {
        let mut seen = vec![false; self.n_qubits];
        for &p in &perm {
            if p >= self.n_qubits || seen[p] {
                return Err(Error::Invalid("final permutation is not injective".into()));
            }
            seen[p] = true;
        }
        self.final_permutation = perm;
        Ok(())
    }

    pub fn is_measured(&self) -> bool {
        self.moments
            .last()
            .is_some_and(|m| m.iter().any(|g| matches!(g.kind, GateKind::Measure)))
    }

    /// Appends a moment after checking qubit bounds, disjointness and that
    /// nothing follows a measurement. Empty moments are dropped.
    pub fn push_moment(&mut self, gates: Vec<Gate>) -> Result<()> {
        if gates.is_empty() {
            return Ok(());
        }
        if self.is_measured() {
            return Err(Error::Structural("gates after the measurement moment".into()));
        }
        let mut used = vec![false; self.n_qubits];
        let measures = gates.iter().filter(|g| matches!(g.kind, GateKind::Measure)).count();
        if measures != 0 && measures != gates.len() {
            return Err(Error::Structural("measurement moment mixes in other gates".into()));
        }
        for g in &gates {
            for &q in &g.qubits {
                if q >= self.n_qubits {
                    return Err(Error::Invalid(format!("qubit {q} out of range {}", self.n_qubits)));
                }
                if used[q] {
                    return Err(Error::Structural(format!("qubit {q} used twice in one moment")));
                }
                used[q] = true;
            }
        }
        self.moments.push(gates);
        Ok(())
    }

    /// Appends the moments of `other` (same width). The final permutation is
    /// left untouched.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::Dimension { expected: self.n_qubits, got: other.n_qubits });
        }
        for m in &other.moments {
            self.push_moment(m.clone())?;
        }
        Ok(())
    }

    /// Measure every qubit.
    pub fn measure_all(&mut self) -> Result<()> {
        self.push_moment((0..self.n_qubits).map(|q| Gate::one(GateKind::Measure, q)).collect())
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.moments.iter().flatten()
    }

    pub fn count(&self, pred: impl Fn(&GateKind) -> bool) -> usize {
        self.gates().filter(|g| pred(&g.kind)).count()
    }

    pub fn syc_count(&self) -> usize {
        self.count(|k| matches!(k, GateKind::Syc))
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates().filter(|g| g.is_two_qubit()).count()
    }

    /// Number of moments holding at least one SYC.
    pub fn syc_layers(&self) -> usize {
        self.moments
            .iter()
            .filter(|m| m.iter().any(|g| matches!(g.kind, GateKind::Syc)))
            .count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Applies a `2^k x 2^k` gate matrix to every column of `m`, acting on the
/// listed qubits. Written with plain index arithmetic so it stays independent
/// of the simulator's strided kernels.
fn apply_dense(m: &mut DMatrix<C64>, qubits: &[usize], g: &[C64], k: usize) {
    let dim = m.nrows();
    let gd = 1usize << k;
    let mask: usize = qubits.iter().map(|&q| 1usize << q).sum();
    for col in 0..m.ncols() {
        for base in 0..dim {
            if base & mask != 0 {
                continue;
            }
            let idx: Vec<usize> = (0..gd)
                .map(|s| {
                    let mut i = base;
                    for (pos, &q) in qubits.iter().enumerate() {
                        if (s >> (k - 1 - pos)) & 1 == 1 {
                            i |= 1 << q;
                        }
                    }
                    i
                })
                .collect();
            let old: Vec<C64> = idx.iter().map(|&i| m[(i, col)]).collect();
            for r in 0..gd {
                m[(idx[r], col)] = (0..gd).map(|c| g[r * gd + c] * old[c]).sum();
            }
        }
    }
}

/// Product of all moment unitaries in order (measurements ignored).
pub fn circuit_unitary(c: &Circuit) -> Result<DMatrix<C64>> {
    if c.n_qubits > MAX_DENSE_QUBITS {
        return Err(Error::Resource(format!(
            "dense unitary limited to {MAX_DENSE_QUBITS} qubits, got {}",
            c.n_qubits
        )));
    }
    let dim = 1usize << c.n_qubits;
    let mut u = DMatrix::<C64>::identity(dim, dim);
    for g in c.gates() {
        match gate_unitary(&g.kind) {
            GateUnitary::One(m) => {
                let flat: Vec<C64> = (0..4).map(|i| m[(i / 2, i % 2)]).collect();
                apply_dense(&mut u, &g.qubits, &flat, 1);
            }
            GateUnitary::Two(m) => {
                let flat: Vec<C64> = (0..16).map(|i| m[(i / 4, i % 4)]).collect();
                apply_dense(&mut u, &g.qubits, &flat, 2);
            }
        }
    }
    Ok(u)
}

pub fn to_dmatrix2(m: &Mat2) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |r, c| m[(r, c)])
}

pub fn to_dmatrix4(m: &Mat4) -> DMatrix<C64> {
    DMatrix::from_fn(4, 4, |r, c| m[(r, c)])
}

/// Splits a 2x2 unitary into `e^{iα} · Rz(vartheta) · PhX(theta, phi)`
/// (PhX applied first). Returns `(theta, phi, vartheta)` with
/// `theta ∈ [0, π]`, `phi ∈ (-π, π]`; `phi = 0` when `theta` is 0 or π.
pub fn phx_rz_decompose(u: &Mat2) -> (f64, f64, f64) {
    // U ∝ Rz(l1) Rx(theta) Rz(l2), with vartheta = l1 + l2, phi = -l2.
    let det = u.determinant();
    let su = u * C64::from_polar(1.0, -det.arg() / 2.0);
    let c = su[(0, 0)].norm();
    let s = su[(1, 0)].norm();
    let theta = 2.0 * s.atan2(c);
    const EPS: f64 = 1e-12;
    let (sum, diff) = if s < EPS {
        (-2.0 * su[(0, 0)].arg(), None)
    } else if c < EPS {
        (0.0, Some(2.0 * (I * su[(1, 0)]).arg()))
    } else {
        (-2.0 * su[(0, 0)].arg(), Some(2.0 * (I * su[(1, 0)]).arg()))
    };
    let (phi, vartheta) = match diff {
        None => (0.0, sum),
        Some(d) if c < EPS => (0.0, d),
        Some(d) => {
            let phi = wrap_angle((d - sum) / 2.0);
            (phi, d - 2.0 * phi)
        }
    };
    (theta, phi, wrap_angle(vartheta))
}

/// Wraps into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let mut x = a.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}
