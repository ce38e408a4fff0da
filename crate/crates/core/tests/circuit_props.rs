use nalgebra::DMatrix;
use proptest::prelude::*;
use qaoa_core::circuit::kak::kak_coefficients;
use qaoa_core::circuit::{
    circuit_unitary, gate_unitary, kron2, phx_matrix, rz_matrix, syc_matrix, zz_matrix, Circuit, Gate, GateKind,
    GateUnitary, Mat2, C64,
};

fn angle() -> impl Strategy<Value = f64> {
    -10.0f64..10.0
}

fn max_unitarity_error(m: DMatrix<C64>) -> f64 {
    let d = m.nrows();
    let e = m.adjoint() * &m - DMatrix::<C64>::identity(d, d);
    e.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn local(a: f64, b: f64, c: f64) -> Mat2 {
    rz_matrix(a) * phx_matrix(b, c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gates_are_unitary(t in angle(), p in angle()) {
        for kind in [
            GateKind::PhX { theta: t, phi: p },
            GateKind::Rz(t),
            GateKind::Syc,
            GateKind::Zz(t),
            GateKind::Swap,
            GateKind::ZzSwap(p),
            GateKind::H,
            GateKind::X,
            GateKind::Measure,
        ] {
            let err = match gate_unitary(&kind) {
                GateUnitary::One(m) => max_unitarity_error(DMatrix::from_fn(2, 2, |r, c| m[(r, c)])),
                GateUnitary::Two(m) => max_unitarity_error(DMatrix::from_fn(4, 4, |r, c| m[(r, c)])),
            };
            prop_assert!(err < 1e-12, "{:?}: {}", kind, err);
        }
    }

    #[test]
    fn kak_is_local_invariant(a in angle(), l in prop::array::uniform12(angle())) {
        let core = zz_matrix(a) * syc_matrix();
        let dressed = kron2(&local(l[0], l[1], l[2]), &local(l[3], l[4], l[5]))
            * core
            * kron2(&local(l[6], l[7], l[8]), &local(l[9], l[10], l[11]));
        let k0 = kak_coefficients(&core).unwrap();
        let k1 = kak_coefficients(&dressed).unwrap();
        for (x, y) in k0.iter().zip(k1) {
            prop_assert!((x - y).abs() < 1e-9, "{:?} vs {:?}", k0, k1);
        }
    }

    #[test]
    fn splitting_a_moment_keeps_the_unitary(angles in prop::array::uniform6(angle()), cut in 1usize..4) {
        let gates = vec![
            Gate::two(GateKind::Zz(angles[0]), 0, 1),
            Gate::phx(2, angles[1], angles[2]),
            Gate::two(GateKind::Syc, 3, 4),
            Gate::rz(5, angles[3]),
        ];
        let mut whole = Circuit::new(6);
        whole.push_moment(vec![Gate::phx(0, angles[4], angles[5])]).unwrap();
        whole.push_moment(gates.clone()).unwrap();
        let mut split = Circuit::new(6);
        split.push_moment(vec![Gate::phx(0, angles[4], angles[5])]).unwrap();
        split.push_moment(gates[..cut].to_vec()).unwrap();
        split.push_moment(gates[cut..].to_vec()).unwrap();
        let d = circuit_unitary(&whole).unwrap() - circuit_unitary(&split).unwrap();
        prop_assert!(d.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
    }
}

#[test]
fn circuit_json_round_trip() {
    let mut c = Circuit::new(3);
    c.push_moment(vec![Gate::phx(0, 0.1, -2.5), Gate::two(GateKind::Syc, 1, 2)]).unwrap();
    c.push_moment(vec![Gate::rz(1, 1.0 / 3.0)]).unwrap();
    c.measure_all().unwrap();
    let s = c.to_json().unwrap();
    assert_eq!(Circuit::from_json(&s).unwrap(), c);
    assert_eq!(Circuit::from_json(&s).unwrap().to_json().unwrap(), s);
}
