//! Canonical (KAK) decomposition of two-qubit unitaries.
//!
//! Every `U ∈ U(4)` factors as
//! `U = g · (A0 ⊗ A1) · exp(i(kx XX + ky YY + kz ZZ)) · (B0 ⊗ B1)`
//! with single-qubit `A*`, `B*`. Coordinates are reported in the Weyl chamber
//! `π/4 ≥ kx ≥ ky ≥ |kz|`, with `kz ≥ 0` whenever `kx = π/4`.
//!
//! The factorization works in the magic basis, where local gates become real
//! orthogonal matrices and the interaction core becomes diagonal. The real and
//! imaginary parts of `WᵀW` are simultaneously diagonalized by one real
//! orthogonal matrix.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};
use std::sync::OnceLock;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};

use super::{kron2, pauli, Mat2, Mat4, C64, I, ZERO};
use crate::error::{Error, Result};

const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct KakDecomposition {
    pub global_phase: C64,
    /// Applied first, `(qubit 0, qubit 1)`.
    pub before: (Mat2, Mat2),
    pub coefficients: [f64; 3],
    /// Applied last, `(qubit 0, qubit 1)`.
    pub after: (Mat2, Mat2),
}

/// `exp(i(x XX + y YY + z ZZ))`.
pub fn interaction_matrix(c: [f64; 3]) -> Mat4 {
    let b = magic();
    let (px, py, pz) = patterns();
    let diag = Vector4::from_fn(|k, _| {
        C64::from_polar(1.0, c[0] * px[k] + c[1] * py[k] + c[2] * pz[k])
    });
    b * Mat4::from_diagonal(&diag) * b.adjoint()
}

impl KakDecomposition {
    pub fn reconstruct(&self) -> Mat4 {
        kron2(&self.after.0, &self.after.1)
            * interaction_matrix(self.coefficients)
            * kron2(&self.before.0, &self.before.1)
            * self.global_phase
    }

    pub fn before_matrix(&self) -> Mat4 {
        kron2(&self.before.0, &self.before.1)
    }

    pub fn after_matrix(&self) -> Mat4 {
        kron2(&self.after.0, &self.after.1)
    }

    // N(v) = N(v + s·π/2·e_k) · (-i P_k P_k)^s
    fn shift(&mut self, k: usize, steps: i64) {
        if steps == 0 {
            return;
        }
        let p = pauli(k + 1);
        let s = steps.rem_euclid(4);
        for _ in 0..s {
            self.before = (p * self.before.0, p * self.before.1);
            self.global_phase *= -I;
        }
        self.coefficients[k] += steps as f64 * FRAC_PI_2;
    }

    /// Negates coordinates `a` and `b` by conjugating with the remaining
    /// Pauli on qubit 0.
    fn negate(&mut self, a: usize, b: usize) {
        let j = 3 - a - b;
        let p = pauli(j + 1);
        self.after.0 *= p;
        self.before.0 = p * self.before.0;
        self.coefficients[a] = -self.coefficients[a];
        self.coefficients[b] = -self.coefficients[b];
    }

    /// Exchanges coordinates `a` and `b` via the Clifford `(P_a + P_b)/√2`
    /// on both qubits.
    fn swap(&mut self, a: usize, b: usize) {
        let s = (pauli(a + 1) + pauli(b + 1)) * C64::new(FRAC_1_SQRT_2, 0.0);
        self.after = (self.after.0 * s, self.after.1 * s);
        self.before = (s * self.before.0, s * self.before.1);
        self.coefficients.swap(a, b);
    }

    fn canonicalize(&mut self) {
        for k in 0..3 {
            let steps = (self.coefficients[k] / FRAC_PI_2).round() as i64;
            self.shift(k, -steps);
            if self.coefficients[k] <= -FRAC_PI_4 + BOUNDARY_TOL {
                self.shift(k, 1);
            }
        }
        // sort by magnitude, descending
        for i in 0..3 {
            let mut best = i;
            for j in i + 1..3 {
                if self.coefficients[j].abs() > self.coefficients[best].abs() + BOUNDARY_TOL {
                    best = j;
                }
            }
            if best != i {
                self.swap(i, best);
            }
        }
        if self.coefficients[0] < 0.0 {
            self.negate(0, 2);
        }
        if self.coefficients[1] < 0.0 {
            self.negate(1, 2);
        }
        if (self.coefficients[0] - FRAC_PI_4).abs() < BOUNDARY_TOL && self.coefficients[2] < 0.0 {
            self.shift(0, -1);
            self.negate(0, 2);
        }
    }
}

fn magic() -> &'static Mat4 {
    static M: OnceLock<Mat4> = OnceLock::new();
    M.get_or_init(|| {
        let h = FRAC_1_SQRT_2;
        let r = C64::new(h, 0.0);
        let i = C64::new(0.0, h);
        Mat4::new(
            r, ZERO, ZERO, i, //
            ZERO, i, r, ZERO, //
            ZERO, i, -r, ZERO, //
            r, ZERO, ZERO, -i,
        )
    })
}

/// Diagonals of `B† (P⊗P) B` for P = X, Y, Z in the magic basis (entries ±1).
fn patterns() -> &'static ([f64; 4], [f64; 4], [f64; 4]) {
    static P: OnceLock<([f64; 4], [f64; 4], [f64; 4])> = OnceLock::new();
    P.get_or_init(|| {
        let b = magic();
        let diag = |k: usize| {
            let p = pauli(k);
            let m = b.adjoint() * kron2(&p, &p) * b;
            [m[(0, 0)].re, m[(1, 1)].re, m[(2, 2)].re, m[(3, 3)].re]
        };
        (diag(1), diag(2), diag(3))
    })
}

/// Factors a 4x4 product `g · (A ⊗ B)` with `A, B ∈ SU(2)`.
pub fn kron_factor(m: &Mat4) -> (C64, Mat2, Mat2) {
    let block = |i: usize, j: usize| -> Mat2 {
        Mat2::new(
            m[(2 * i, 2 * j)],
            m[(2 * i, 2 * j + 1)],
            m[(2 * i + 1, 2 * j)],
            m[(2 * i + 1, 2 * j + 1)],
        )
    };
    let (mut bi, mut bj, mut best) = (0, 0, -1.0);
    for i in 0..2 {
        for j in 0..2 {
            let n = block(i, j).norm();
            if n > best {
                best = n;
                bi = i;
                bj = j;
            }
        }
    }
    let mut b = block(bi, bj);
    let det = b.determinant();
    b /= det.sqrt();
    let mut a = Mat2::from_fn(|i, j| (b.adjoint() * block(i, j)).trace() / 2.0);
    let det_a = a.determinant();
    let g = det_a.sqrt();
    a /= g;
    (g, a, b)
}

fn unitarity_error4(u: &Mat4) -> f64 {
    (u.adjoint() * u - Mat4::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Real orthogonal `P` (det +1) with `Pᵀ M P` diagonal for a complex
/// symmetric unitary `M`.
fn diagonalize_symmetric_unitary(m: &Mat4) -> Result<Matrix4<f64>> {
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im);
    let mut best: Option<(f64, Matrix4<f64>)> = None;
    for t in [0.612_345_f64, 1.234_567, 2.345_678, 0.123_456, 2.987_654, 1.777_777] {
        let (s, c) = t.sin_cos();
        let comb = re * c + im * s;
        let comb = (comb + comb.transpose()) * 0.5;
        let eig = SymmetricEigen::new(comb);
        let mut p = eig.eigenvectors;
        if p.determinant() < 0.0 {
            p.column_mut(0).neg_mut();
        }
        let pc = p.map(|x| C64::new(x, 0.0));
        let d = pc.transpose() * m * pc;
        let off = (0..4)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .filter(|(r, c)| r != c)
            .map(|(r, c)| d[(r, c)].norm())
            .fold(0.0, f64::max);
        if off < 1e-12 {
            return Ok(p);
        }
        if best.as_ref().map_or(true, |(o, _)| off < *o) {
            best = Some((off, p));
        }
    }
    match best {
        Some((off, p)) if off < 1e-9 => Ok(p),
        Some((off, _)) => Err(Error::Numerical(format!(
            "simultaneous diagonalization residual {off:e}"
        ))),
        None => unreachable!(),
    }
}

/// Canonical decomposition of a two-qubit unitary.
pub fn kak_decomposition(u: &Mat4) -> Result<KakDecomposition> {
    if unitarity_error4(u) > 1e-10 {
        return Err(Error::Numerical("input is not unitary".into()));
    }
    let det = u.determinant();
    let g0 = C64::from_polar(1.0, det.arg() / 4.0);
    let v = u / g0;
    let b = magic();
    let w = b.adjoint() * v * b;
    let m2 = w.transpose() * w;
    let p = diagonalize_symmetric_unitary(&m2)?;
    let pc = p.map(|x| C64::new(x, 0.0));
    let d = pc.transpose() * m2 * pc;
    let mut theta: [f64; 4] = std::array::from_fn(|k| d[(k, k)].arg() / 2.0);
    let k1_of = |theta: &[f64; 4]| {
        let inv = Mat4::from_diagonal(&Vector4::from_fn(|k, _| C64::from_polar(1.0, -theta[k])));
        w * pc * inv
    };
    let mut k1 = k1_of(&theta);
    if k1.map(|z| z.re).determinant() < 0.0 {
        theta[0] += std::f64::consts::PI;
        k1 = k1_of(&theta);
    }
    let k1_real = k1.map(|z| C64::new(z.re, 0.0));
    let left = b * k1_real * b.adjoint();
    let right = b * pc.transpose() * b.adjoint();
    let (gl, a0, a1) = kron_factor(&left);
    let (gr, b0, b1) = kron_factor(&right);

    // theta_k = psi + x px_k + y py_k + z pz_k
    let (px, py, pz) = patterns();
    let sys = Matrix4::from_fn(|r, c| match c {
        0 => 1.0,
        1 => px[r],
        2 => py[r],
        _ => pz[r],
    });
    let sol = sys
        .lu()
        .solve(&Vector4::from_fn(|r, _| theta[r]))
        .ok_or_else(|| Error::Numerical("singular pattern system".into()))?;
    let mut kak = KakDecomposition {
        global_phase: g0 * gl * gr * C64::from_polar(1.0, sol[0]),
        before: (b0, b1),
        coefficients: [sol[1], sol[2], sol[3]],
        after: (a0, a1),
    };
    kak.canonicalize();
    Ok(kak)
}

/// Weyl-chamber coordinates `(kx, ky, kz)`.
pub fn kak_coefficients(u: &Mat4) -> Result<[f64; 3]> {
    Ok(kak_decomposition(u)?.coefficients)
}
