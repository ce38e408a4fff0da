//! Compilation of ZZ, SWAP and ZZ·SWAP interactions into SYC plus
//! single-qubit PhX/Rz gates, and normalization of circuits into alternating
//! PhX / SYC layers.
//!
//! Two SYC gates sandwiching `I ⊗ Rx` reach every CPHASE class: the operator
//! Schmidt coefficients of the sandwich are given in closed form by
//! [`composite_singular_values`], and the inner angle is picked so that they
//! match those of the target. Local dressings come from aligning the KAK
//! decompositions of target and core.

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::circuit::kak::{kak_decomposition, KakDecomposition};
use crate::circuit::{
    circuit_unitary, distance4, phx_matrix, phx_rz_decompose, rz_matrix, swap_matrix, wrap_angle,
    zz_matrix, Circuit, Gate, GateKind, GateUnitary, Mat2, Mat4, C64,
};
use crate::error::{Error, Result};
use crate::rng;

/// CPHASE half-angle inside the SYC gate.
pub const SYC_PHI: f64 = -PI / 24.0;

/// Acceptance threshold for every synthesized block.
pub const SYNTHESIS_TOL: f64 = 1e-8;

/// Gate angles below this are treated as the identity and dropped.
const ANGLE_EPS: f64 = 1e-13;

/// Interior angles of the three-SYC SWAP template
/// `SYC · (PhX(a0,a1) ⊗ PhX(a2,a3)) · SYC · (PhX(a4,a5) ⊗ PhX(a6,a7)) · SYC`
/// (the rightmost factor acts first). Reproduced by
/// [`search_swap_template`].
pub const SWAP_TEMPLATE_ANGLES: [f64; 8] = [
    3.1415926535897936,
    1.8659296281132578,
    1.9275116140833386,
    1.3659542184493483,
    5.069104267673132,
    4.769346259838291,
    6.283185307179586,
    3.94923296587419,
];

/// Start count and seed that regenerate [`SWAP_TEMPLATE_ANGLES`].
pub const SWAP_SEARCH: (usize, u64) = (200, 2024);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularValueReport {
    pub theta1: f64,
    pub theta2: f64,
    pub phi: f64,
    pub eta: f64,
    pub xi: f64,
    /// `(λ0, λ1, λ2, λ3)` in formula order.
    pub lambdas: [f64; 4],
}

impl SingularValueReport {
    pub fn sorted(&self) -> [f64; 4] {
        let mut l = self.lambdas;
        l.sort_by(|a, b| b.total_cmp(a));
        l
    }
}

/// Operator Schmidt coefficients of two SYC gates sandwiching
/// `exp(iθ1 X) ⊗ exp(iθ2 X)`. Normalized so that `Σ λ² = 1`.
pub fn composite_singular_values(theta1: f64, theta2: f64) -> SingularValueReport {
    let phi = SYC_PHI;
    let (s1, c1) = theta1.sin_cos();
    let (s2, c2) = theta2.sin_cos();
    let cp = (2.0 * phi).cos();
    let cp2 = cp * cp;
    let eta = 0.5 - 0.5 * cp2 * (s1 * s1 * s2 * s2 + c1 * c1 * c2 * c2);
    let xi = cp2 * (s1 * s2 * c1 * c2).abs();
    let root = (eta * eta - xi * xi).max(0.0).sqrt();
    SingularValueReport {
        theta1,
        theta2,
        phi,
        eta,
        xi,
        lambdas: [
            (cp * c1 * c2).abs(),
            (cp * s1 * s2).abs(),
            (eta + root).max(0.0).sqrt(),
            (eta - root).max(0.0).sqrt(),
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthOptions {
    /// Emit nothing for targets that are the identity up to phase.
    pub skip_identity: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions { skip_identity: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZzSynthesis {
    pub circuit: Circuit,
    /// Middle-layer rotation `exp(-iθ2 X)` on qubit 1; `None` for the empty
    /// realization.
    pub theta2: Option<f64>,
    /// Whether the Schmidt pair was matched as `(|sin a|, |cos a|)`.
    pub alternate_pair: bool,
}

/// `true` when `|cos a| > cos 2φ`, i.e. the direct Schmidt match is out of
/// reach and the swapped pair is used.
pub fn zz_uses_alternate_pair(angle: f64) -> bool {
    angle.cos().abs() > (2.0 * SYC_PHI).cos()
}

pub fn synth_zz(angle: f64) -> Result<Circuit> {
    Ok(synth_zz_with(angle, SynthOptions::default())?.circuit)
}

/// `exp(-i·angle·Z⊗Z)` on qubits `[0, 1]` with two SYC gates.
pub fn synth_zz_with(angle: f64, opts: SynthOptions) -> Result<ZzSynthesis> {
    if !angle.is_finite() {
        return Err(Error::Synthesis(format!("non-finite angle {angle}")));
    }
    let a = angle.rem_euclid(PI);
    let a = if PI - a < 1e-15 { 0.0 } else { a };
    if opts.skip_identity && a.abs() < 1e-12 {
        return Ok(ZzSynthesis { circuit: Circuit::new(2), theta2: None, alternate_pair: false });
    }
    let cp = (2.0 * SYC_PHI).cos();
    let alternate_pair = zz_uses_alternate_pair(a);
    let c2 = if alternate_pair { a.sin().abs() / cp } else { a.cos().abs() / cp };
    let theta2 = c2.clamp(-1.0, 1.0).acos();
    let mut core = Circuit::new(2);
    core.push_moment(vec![Gate::syc(0, 1)])?;
    core.push_moment(vec![Gate::phx(1, 2.0 * theta2, 0.0)])?;
    core.push_moment(vec![Gate::syc(0, 1)])?;
    let circuit = dress(&core, &zz_matrix(a))?;
    Ok(ZzSynthesis { circuit, theta2: Some(theta2), alternate_pair })
}

fn swap_template(p: &[f64]) -> Circuit {
    let mut c = Circuit::new(2);
    let moments = [
        vec![Gate::syc(0, 1)],
        vec![Gate::phx(0, p[4], p[5]), Gate::phx(1, p[6], p[7])],
        vec![Gate::syc(0, 1)],
        vec![Gate::phx(0, p[0], p[1]), Gate::phx(1, p[2], p[3])],
        vec![Gate::syc(0, 1)],
    ];
    for m in moments {
        c.push_moment(m).expect("template moments are valid");
    }
    c
}

/// Two-qubit circuit unitary in gate convention (qubit 0 is the high bit).
fn dense4(c: &Circuit) -> Result<Mat4> {
    let u = circuit_unitary(c)?;
    let flip = |i: usize| ((i & 1) << 1) | (i >> 1);
    Ok(Mat4::from_fn(|r, k| u[(flip(r), flip(k))]))
}

fn magic_m2(u: &Mat4) -> Mat4 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let r = C64::new(h, 0.0);
    let i = C64::new(0.0, h);
    let b = Mat4::new(r, z, z, i, z, i, r, z, z, i, -r, z, r, z, z, -i);
    let det = u.determinant();
    let v = u / C64::from_polar(1.0, det.arg() / 4.0);
    let w = b.adjoint() * v * b;
    w.transpose() * w
}

/// Residual whose zero set is the SWAP and identity classes: the deviation of
/// `WᵀW` (magic basis) from a multiple of the identity.
fn swap_residual(p: &[f64]) -> DVector<f64> {
    let u = dense4(&swap_template(p)).expect("two-qubit template");
    let m2 = magic_m2(&u);
    let t = m2.trace() / 4.0;
    let mut r = DVector::zeros(32);
    for (k, z) in (m2 - Mat4::identity() * t).iter().enumerate() {
        r[2 * k] = z.re;
        r[2 * k + 1] = z.im;
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapTemplateFit {
    pub angles: [f64; 8],
    pub residual: f64,
    pub start: usize,
}

/// Multistart Levenberg-Marquardt over the eight template angles. Returns the
/// first start whose optimum lies in the SWAP class.
pub fn search_swap_template(starts: usize, seed: u64) -> Result<SwapTemplateFit> {
    let mut r = rng::rng_from_seed(seed);
    for start in 0..starts {
        let x0: Vec<f64> = (0..8).map(|_| rng::unit_f64(&mut r) * 2.0 * PI).collect();
        let (x, res) = levenberg_marquardt(&x0, 400);
        if res > 1e-12 {
            continue;
        }
        let u = dense4(&swap_template(&x))?;
        let k = kak_decomposition(&u)?;
        if k.coefficients.iter().all(|c| (c - FRAC_PI_4).abs() < 1e-9) {
            let mut angles = [0.0; 8];
            angles.copy_from_slice(&x);
            return Ok(SwapTemplateFit { angles, residual: res, start });
        }
    }
    Err(Error::Synthesis("no start reached the SWAP class".into()))
}

fn levenberg_marquardt(x0: &[f64], iters: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut r = swap_residual(x.as_slice());
    let mut cost = r.norm_squared();
    let mut mu = 1e-3;
    let h = 1e-7;
    for _ in 0..iters {
        if cost < 1e-28 {
            break;
        }
        let mut j = DMatrix::zeros(r.len(), n);
        for c in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += h;
            xm[c] -= h;
            let d = (swap_residual(xp.as_slice()) - swap_residual(xm.as_slice())) / (2.0 * h);
            j.set_column(c, &d);
        }
        let jt = j.transpose();
        let g = &jt * &r;
        let a = &jt * &j;
        let mut improved = false;
        for _ in 0..20 {
            let mut damped = a.clone();
            for d in 0..n {
                damped[(d, d)] += mu * (1.0 + a[(d, d)]);
            }
            let Some(step) = damped.lu().solve(&(-&g)) else {
                mu *= 10.0;
                continue;
            };
            let xn = &x + &step;
            let rn = swap_residual(xn.as_slice());
            let cn = rn.norm_squared();
            if cn < cost {
                x = xn;
                r = rn;
                cost = cn;
                mu = (mu / 3.0).max(1e-15);
                improved = true;
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    (x.as_slice().to_vec(), cost.sqrt())
}

fn swap_cache() -> &'static Result<Circuit, String> {
    static CACHE: OnceLock<Result<Circuit, String>> = OnceLock::new();
    CACHE.get_or_init(|| {
        dress(&swap_template(&SWAP_TEMPLATE_ANGLES), &swap_matrix()).map_err(|e| e.to_string())
    })
}

/// SWAP on qubits `[0, 1]` with three SYC gates.
pub fn synth_swap() -> Circuit {
    match swap_cache() {
        Ok(c) => c.clone(),
        Err(e) => panic!("frozen SWAP template is invalid: {e}"),
    }
}

pub fn synth_zzswap(angle: f64) -> Result<Circuit> {
    synth_zzswap_with(angle, SynthOptions::default())
}

/// `exp(-i·angle·Z⊗Z) · SWAP` on qubits `[0, 1]`: the residual CPHASE
/// `angle + π/4 - π/24` in two SYC followed by one SYC.
pub fn synth_zzswap_with(angle: f64, opts: SynthOptions) -> Result<Circuit> {
    if !angle.is_finite() {
        return Err(Error::Synthesis(format!("non-finite angle {angle}")));
    }
    let residual = angle + FRAC_PI_4 + SYC_PHI;
    let mut core = synth_zz_with(residual, opts)?.circuit;
    core.push_moment(vec![Gate::syc(0, 1)])?;
    dress(&core, &(zz_matrix(angle) * swap_matrix()))
}

/// Sandwiches `core` between the single-qubit layers that turn it into
/// `target` up to global phase, then normalizes.
fn dress(core: &Circuit, target: &Mat4) -> Result<Circuit> {
    let kt = kak_decomposition(target)?;
    let kc = kak_decomposition(&dense4(core)?)?;
    let mismatch =
        kt.coefficients.iter().zip(kc.coefficients).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if mismatch > 1e-7 {
        return Err(Error::Synthesis(format!(
            "core class {:?} differs from target {:?}",
            kc.coefficients, kt.coefficients
        )));
    }
    let (before, after) = alignment(&kt, &kc);
    let mut c = Circuit::new(2);
    push_local_layer(&mut c, &before)?;
    c.append(core)?;
    push_local_layer(&mut c, &after)?;
    let c = normalize_layers(&c)?;
    let err = distance4(&dense4(&c)?, target);
    if err >= SYNTHESIS_TOL {
        return Err(Error::Synthesis(format!("residual distance {err:e}")));
    }
    Ok(c)
}

fn alignment(kt: &KakDecomposition, kc: &KakDecomposition) -> ([Mat2; 2], [Mat2; 2]) {
    let before = [kc.before.0.adjoint() * kt.before.0, kc.before.1.adjoint() * kt.before.1];
    let after = [kt.after.0 * kc.after.0.adjoint(), kt.after.1 * kc.after.1.adjoint()];
    (before, after)
}

fn push_local_layer(c: &mut Circuit, locals: &[Mat2; 2]) -> Result<()> {
    let parts: Vec<(f64, f64, f64)> = locals.iter().map(phx_rz_decompose).collect();
    c.push_moment(
        parts.iter().enumerate().map(|(q, &(t, p, _))| Gate::phx(q, t, p)).collect(),
    )?;
    c.push_moment(parts.iter().enumerate().map(|(q, &(_, _, v))| Gate::rz(q, v)).collect())
}

/// Two-qubit block for one abstract gate, on qubits `[0, 1]`.
pub fn synthesize_gate(kind: &GateKind, opts: SynthOptions) -> Result<Circuit> {
    match *kind {
        GateKind::Zz(a) => Ok(synth_zz_with(a, opts)?.circuit),
        GateKind::ZzSwap(a) => synth_zzswap_with(a, opts),
        GateKind::Swap => Ok(synth_swap()),
        GateKind::Syc => {
            let mut c = Circuit::new(2);
            c.push_moment(vec![Gate::syc(0, 1)])?;
            Ok(c)
        }
        other => Err(Error::Synthesis(format!("{} is not a two-qubit interaction", other.name()))),
    }
}

/// A synthesized block cut at its SYC moments.
struct Segmented {
    /// `lead[k]`: single-qubit moments before the `k`-th SYC moment.
    lead: Vec<Vec<Vec<Gate>>>,
    syc: Vec<Vec<Gate>>,
    tail: Vec<Vec<Gate>>,
}

fn segment(block: &Circuit, map: [usize; 2]) -> Segmented {
    let mut s = Segmented { lead: Vec::new(), syc: Vec::new(), tail: Vec::new() };
    for m in block.moments() {
        let mapped: Vec<Gate> = m.iter().map(|g| g.remapped(&map)).collect();
        if mapped.iter().any(|g| matches!(g.kind(), GateKind::Syc)) {
            s.lead.push(std::mem::take(&mut s.tail));
            s.syc.push(mapped);
        } else {
            s.tail.push(mapped);
        }
    }
    s
}

fn merge_into(dst: &mut Vec<Vec<Gate>>, moments: Vec<Vec<Gate>>) {
    for (i, m) in moments.into_iter().enumerate() {
        if dst.len() <= i {
            dst.push(Vec::new());
        }
        dst[i].extend(m);
    }
}

/// Replaces every ZZ / ZZSwap / SWAP by its SYC realization and normalizes.
/// The blocks of one moment are aligned on their SYC layers.
pub fn compile_circuit(c: &Circuit, opts: SynthOptions) -> Result<Circuit> {
    let mut out = Circuit::new(c.n_qubits());
    for moment in c.moments() {
        let (two, one): (Vec<&Gate>, Vec<&Gate>) = moment.iter().partition(|g| g.is_two_qubit());
        if two.is_empty() {
            out.push_moment(moment.clone())?;
            continue;
        }
        out.push_moment(one.into_iter().cloned().collect())?;
        let mut lead: Vec<Vec<Vec<Gate>>> = Vec::new();
        let mut syc: Vec<Vec<Gate>> = Vec::new();
        let mut tail: Vec<Vec<Gate>> = Vec::new();
        for g in two {
            let block = synthesize_gate(g.kind(), opts)?;
            let s = segment(&block, [g.qubits()[0], g.qubits()[1]]);
            for (k, (l, y)) in s.lead.into_iter().zip(s.syc).enumerate() {
                if lead.len() <= k {
                    lead.push(Vec::new());
                    syc.push(Vec::new());
                }
                merge_into(&mut lead[k], l);
                syc[k].extend(y);
            }
            merge_into(&mut tail, s.tail);
        }
        for (l, y) in lead.into_iter().zip(syc) {
            for m in l {
                out.push_moment(m)?;
            }
            out.push_moment(y)?;
        }
        for m in tail {
            out.push_moment(m)?;
        }
    }
    out.set_final_permutation(c.final_permutation().to_vec())?;
    normalize_layers(&out)
}

/// Per-qubit pending single-qubit operation `Rz(rz) · PhX(theta, phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Pending {
    theta: f64,
    phi: f64,
    rz: f64,
}

impl Pending {
    const IDENTITY: Pending = Pending { theta: 0.0, phi: 0.0, rz: 0.0 };

    fn rz_only(rz: f64) -> Self {
        Pending { rz, ..Pending::IDENTITY }
    }

    fn has_phx(&self) -> bool {
        self.theta.abs() > ANGLE_EPS
    }

    fn matrix(&self) -> Mat2 {
        rz_matrix(self.rz) * phx_matrix(self.theta, self.phi)
    }

    fn from_matrix(u: &Mat2) -> Self {
        let (theta, phi, rz) = phx_rz_decompose(u);
        Pending { theta, phi, rz }
    }

    fn then(self, kind: &GateKind) -> Result<Self> {
        match *kind {
            GateKind::Rz(t) => Ok(Pending { rz: wrap_angle(self.rz + t), ..self }),
            GateKind::PhX { theta, phi } => {
                let canonical = (0.0..=PI).contains(&theta)
                    && phi > -PI
                    && phi <= PI
                    && !((theta == 0.0 || theta == PI) && phi != 0.0);
                if !self.has_phx() && canonical {
                    // PhX(θ, φ) · Rz(v) = Rz(v) · PhX(θ, φ - v)
                    if theta < ANGLE_EPS {
                        return Ok(Pending { theta, phi: 0.0, rz: self.rz });
                    }
                    let phi = wrap_angle(phi - self.rz);
                    if theta == PI {
                        // PhX(π, φ) = Rz(2φ) · PhX(π, 0)
                        return Ok(Pending { theta, phi: 0.0, rz: wrap_angle(self.rz + 2.0 * phi) });
                    }
                    return Ok(Pending { theta, phi, rz: self.rz });
                }
                Ok(Pending::from_matrix(&(phx_matrix(theta, phi) * self.matrix())))
            }
            GateKind::H | GateKind::X => match crate::circuit::gate_unitary(kind) {
                GateUnitary::One(m) => Ok(Pending::from_matrix(&(m * self.matrix()))),
                GateUnitary::Two(_) => unreachable!(),
            },
            other => Err(Error::Normalization(format!("unexpected gate {}", other.name()))),
        }
    }
}

/// Merges single-qubit runs into `PhX` then `Rz`, moves every `Rz` to the
/// right through SYC and PhX, and drops those that reach a measurement.
///
/// Output layout: `PhX, SYC, PhX, SYC, ..., PhX` followed by either a
/// `Measure` moment or, for unmeasured circuits, a final `Rz` moment.
pub fn normalize_layers(c: &Circuit) -> Result<Circuit> {
    let n = c.n_qubits();
    let mut pending = vec![Pending::IDENTITY; n];
    let mut out = Circuit::new(n);
    for moment in c.moments() {
        if moment.iter().any(|g| matches!(g.kind(), GateKind::Measure)) {
            let measured: Vec<usize> = moment.iter().map(|g| g.qubits()[0]).collect();
            flush_phx(&mut out, &pending, |_| true)?;
            out.push_moment(
                (0..n)
                    .filter(|q| !measured.contains(q) && pending[*q].rz.abs() > ANGLE_EPS)
                    .map(|q| Gate::rz(q, pending[q].rz))
                    .collect(),
            )?;
            pending = vec![Pending::IDENTITY; n];
            out.push_moment(moment.clone())?;
            continue;
        }
        let mut sycs = Vec::new();
        for g in moment {
            match g.kind() {
                GateKind::Syc => sycs.push(g.clone()),
                k if k.arity() == 1 => {
                    let q = g.qubits()[0];
                    pending[q] = pending[q].then(k)?;
                }
                other => {
                    return Err(Error::Normalization(format!(
                        "{} must be synthesized before normalization",
                        other.name()
                    )))
                }
            }
        }
        if sycs.is_empty() {
            continue;
        }
        let touched: Vec<usize> = sycs.iter().flat_map(|g| g.qubits().to_vec()).collect();
        flush_phx(&mut out, &pending, |q| touched.contains(&q))?;
        for g in &sycs {
            let (a, b) = (g.qubits()[0], g.qubits()[1]);
            // SYC · (Rz(x) ⊗ Rz(y)) = (Rz(y) ⊗ Rz(x)) · SYC
            let (ra, rb) = (pending[a].rz, pending[b].rz);
            pending[a] = Pending::rz_only(rb);
            pending[b] = Pending::rz_only(ra);
        }
        out.push_moment(sycs)?;
    }
    if !out.is_measured() {
        flush_phx(&mut out, &pending, |_| true)?;
        out.push_moment(
            (0..n)
                .filter(|&q| pending[q].rz.abs() > ANGLE_EPS)
                .map(|q| Gate::rz(q, pending[q].rz))
                .collect(),
        )?;
    }
    out.set_final_permutation(c.final_permutation().to_vec())?;
    Ok(out)
}

fn flush_phx(out: &mut Circuit, pending: &[Pending], select: impl Fn(usize) -> bool) -> Result<()> {
    out.push_moment(
        pending
            .iter()
            .enumerate()
            .filter(|&(q, p)| select(q) && p.has_phx())
            .map(|(q, p)| Gate::phx(q, p.theta, p.phi))
            .collect(),
    )
}
