use proptest::prelude::*;
use qaoa_core::mitigation::{
    calibrate, corrected_expectation_c, corrected_zz, estimate_flip_probs, raw_zz, symmetrize_measurement, unflip,
    RawZz, ReadoutCalibration,
};
use qaoa_core::problems::{generate, Family};
use qaoa_core::rng::{self, WorkbenchRng};
use qaoa_core::routing::{build_qaoa_abstract, QaoaParams};
use qaoa_core::simulator::{apply_readout_noise, evolve, expectation_c, sample_bitstrings, NoiseModel};

fn uniform_cal(p0: f64, p1: f64, n: usize) -> ReadoutCalibration {
    ReadoutCalibration { p0: vec![p0; n], p1: vec![p1; n], shots_used: 0 }
}

/// Two-qubit shots with `⟨Z0⟩ = zi`, `⟨Z1⟩ = zj`, `⟨Z0 Z1⟩ = v`.
fn synthetic_shots(v: f64, zi: f64, zj: f64, shots: usize, r: &mut WorkbenchRng) -> Vec<u64> {
    // p(s0, s1) = (1 + s0 zi + s1 zj + s0 s1 v) / 4
    let probs: Vec<f64> = (0..4u64)
        .map(|b| {
            let s0 = if b & 1 == 0 { 1.0 } else { -1.0 };
            let s1 = if b & 2 == 0 { 1.0 } else { -1.0 };
            (1.0 + s0 * zi + s1 * zj + s0 * s1 * v) / 4.0
        })
        .collect();
    (0..shots)
        .map(|_| {
            let mut u = rng::unit_f64(r);
            for (b, &p) in probs.iter().enumerate() {
                if u < p {
                    return b as u64;
                }
                u -= p;
            }
            3
        })
        .collect()
}

fn within(est: f64, truth: f64, shots: usize, sigmas: f64) -> bool {
    (est - truth).abs() <= sigmas * (truth * (1.0 - truth) / shots as f64).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn correction_inverts_forward_channel(
        pi0 in 0.0f64..0.45, pi1 in 0.0f64..0.45,
        pj0 in 0.0f64..0.45, pj1 in 0.0f64..0.45,
        v in -1.0f64..1.0, zi in -1.0f64..1.0, zj in -1.0f64..1.0,
    ) {
        let cal = ReadoutCalibration { p0: vec![pi0, pj0], p1: vec![pi1, pj1], shots_used: 0 };
        let (ai, bi) = (pi1 - pi0, 1.0 - pi0 - pi1);
        let (aj, bj) = (pj1 - pj0, 1.0 - pj0 - pj1);
        // E[Z̃i Z̃j] = E[(ai + bi Zi)(aj + bj Zj)]
        let raw = RawZz { zz: ai * aj + ai * bj * zj + aj * bi * zi + bi * bj * v, zi: ai + bi * zi, zj: aj + bj * zj };
        let c = corrected_zz(raw, &cal, 0, 1, false).unwrap();
        prop_assert!((c - v).abs() < 1e-9);

        let sym = RawZz { zz: bi * bj * v, zi: 0.0, zj: 0.0 };
        let c = corrected_zz(sym, &cal, 0, 1, true).unwrap();
        prop_assert!((c - v).abs() < 1e-9);
    }

    #[test]
    fn ill_posed_rates_rejected(p0 in 0.5f64..1.0, p1 in 0.5f64..1.0) {
        let raw = RawZz { zz: 0.1, zi: 0.0, zj: 0.0 };
        prop_assert!(corrected_zz(raw, &uniform_cal(p0, p1, 2), 0, 1, true).is_err());
    }
}

#[test]
fn monte_carlo_unbiased() {
    let mut r = rng::rng_from_seed(81);
    let shots = 200_000;
    for &(p0, p1, v, zi, zj) in &[(0.05, 0.05, 0.8, 0.0, 0.0), (0.01, 0.07, -0.4, 0.3, -0.5), (0.1, 0.2, 0.6, 0.7, 0.5)] {
        let clean = synthetic_shots(v, zi, zj, shots, &mut r);
        let noisy = apply_readout_noise(&clean, &NoiseModel::readout(2, p0, p1).unwrap(), &mut r);
        let cal = uniform_cal(p0, p1, 2);
        let mean = corrected_zz(raw_zz(&noisy, 0, 1), &cal, 0, 1, false).unwrap();
        let per_shot: Vec<f64> = noisy
            .iter()
            .map(|b| corrected_zz(raw_zz(&[*b], 0, 1), &cal, 0, 1, false).unwrap())
            .collect();
        let var = per_shot.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (shots - 1) as f64;
        let stderr = (var / shots as f64).sqrt();
        assert!((mean - v).abs() < 3.0 * stderr, "{mean} vs {v} ± {stderr}");
    }
}

#[test]
fn bias_below_one_percent_at_a_million_shots() {
    let mut r = rng::rng_from_seed(82);
    let clean = synthetic_shots(0.8, 0.0, 0.0, 1_000_000, &mut r);
    let noisy = apply_readout_noise(&clean, &NoiseModel::readout(2, 0.05, 0.05).unwrap(), &mut r);
    let c = corrected_zz(raw_zz(&noisy, 0, 1), &uniform_cal(0.05, 0.05, 2), 0, 1, true).unwrap();
    assert!((c - 0.8).abs() < 0.01);
}

#[test]
fn corrected_values_are_not_clamped() {
    // v = 1 and few shots: roughly half of the estimates overshoot.
    let mut r = rng::rng_from_seed(83);
    let noise = NoiseModel::readout(2, 0.1, 0.1).unwrap();
    let cal = uniform_cal(0.1, 0.1, 2);
    let estimates: Vec<f64> = (0..200)
        .map(|_| {
            let noisy = apply_readout_noise(&[0u64; 50], &noise, &mut r);
            corrected_zz(raw_zz(&noisy, 0, 1), &cal, 0, 1, true).unwrap()
        })
        .collect();
    assert!(estimates.iter().any(|&e| e > 1.0));
    let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    assert!((mean - 1.0).abs() < 0.03);
}

#[test]
fn flip_rate_estimates() {
    let shots = 1_000_000;
    let mut r = rng::rng_from_seed(84);
    let cal = calibrate(&NoiseModel::readout(1, 0.03, 0.0).unwrap(), shots, &mut r).unwrap();
    assert!(within(cal.p0[0], 0.03, shots, 5.0));
    assert_eq!(cal.shots_used, shots);

    let cal = calibrate(&NoiseModel::readout(3, 0.01, 0.07).unwrap(), shots, &mut r).unwrap();
    for q in 0..3 {
        assert!(within(cal.p0[q], 0.01, shots, 5.0));
        assert!(within(cal.p1[q], 0.07, shots, 5.0));
    }
}

#[test]
fn symmetrized_rates_are_averaged() {
    let (n, shots) = (3, 400_000);
    let ones = (1u64 << n) - 1;
    let noise = NoiseModel::readout(n, 0.0, 0.1).unwrap();
    let mut r = rng::rng_from_seed(85);
    // Half the shots measured directly, half behind an X layer and flipped back.
    let run = |prep: u64, r: &mut WorkbenchRng| {
        let mut bits = apply_readout_noise(&vec![prep; shots / 2], &noise, r);
        bits.extend(unflip(&apply_readout_noise(&vec![prep ^ ones; shots / 2], &noise, r), n));
        bits
    };
    let zero = run(0, &mut r);
    let one = run(ones, &mut r);
    let cal = estimate_flip_probs(&zero, &one, n).unwrap();
    for q in 0..n {
        assert!(within(cal.p0[q], 0.05, shots, 5.0), "p0[{q}] = {}", cal.p0[q]);
        assert!(within(cal.p1[q], 0.05, shots, 5.0), "p1[{q}] = {}", cal.p1[q]);
    }
}

#[test]
fn symmetric_channel_halves_agree() {
    let g = generate(Family::HardwareGrid, 6, 2).unwrap();
    let circuit = build_qaoa_abstract(&g, &QaoaParams::new(vec![0.5], vec![-0.35]).unwrap()).unwrap();
    let (plain, flipped) = symmetrize_measurement(&circuit).unwrap();
    let noise = NoiseModel::readout(6, 0.04, 0.04).unwrap();
    let shots = 100_000;
    let mut r = rng::rng_from_seed(86);
    let a = apply_readout_noise(&sample_bitstrings(&evolve(&plain, None).unwrap(), shots, &mut r), &noise, &mut r);
    let b = unflip(
        &apply_readout_noise(&sample_bitstrings(&evolve(&flipped, None).unwrap(), shots, &mut r), &noise, &mut r),
        6,
    );
    for q in 0..6 {
        let fa = a.iter().filter(|&&x| (x >> q) & 1 == 1).count() as f64 / shots as f64;
        let fb = b.iter().filter(|&&x| (x >> q) & 1 == 1).count() as f64 / shots as f64;
        let sigma = ((fa * (1.0 - fa) + fb * (1.0 - fb)) / shots as f64).sqrt();
        assert!((fa - fb).abs() < 5.0 * sigma, "qubit {q}: {fa} vs {fb}");
    }
}

#[test]
fn corrected_cost_matches_exact_end_to_end() {
    let g = generate(Family::HardwareGrid, 8, 5).unwrap();
    let circuit = build_qaoa_abstract(&g, &QaoaParams::new(vec![0.6], vec![-0.3]).unwrap()).unwrap();
    let exact = expectation_c(&evolve(&circuit, None).unwrap(), &g).unwrap();
    let noise = NoiseModel::readout(8, 0.02, 0.08).unwrap();
    let mut r = rng::rng_from_seed(87);
    let cal = calibrate(&noise, 200_000, &mut r).unwrap();
    let shots = 50_000;

    let state = evolve(&circuit, None).unwrap();
    let bits = apply_readout_noise(&sample_bitstrings(&state, shots, &mut r), &noise, &mut r);
    let (mean, stderr) = corrected_expectation_c(&bits, &g, &cal, false).unwrap();
    assert!((mean - exact).abs() < 3.0 * stderr, "plain {mean} vs {exact} ± {stderr}");

    let (plain, flipped) = symmetrize_measurement(&circuit).unwrap();
    let mut bits = apply_readout_noise(&sample_bitstrings(&evolve(&plain, None).unwrap(), shots / 2, &mut r), &noise, &mut r);
    bits.extend(unflip(
        &apply_readout_noise(&sample_bitstrings(&evolve(&flipped, None).unwrap(), shots / 2, &mut r), &noise, &mut r),
        8,
    ));
    // The symmetrized channel has both rates equal to the mean rate.
    let sym_cal = ReadoutCalibration {
        p0: cal.p0.iter().zip(&cal.p1).map(|(a, b)| (a + b) / 2.0).collect(),
        p1: cal.p0.iter().zip(&cal.p1).map(|(a, b)| (a + b) / 2.0).collect(),
        shots_used: cal.shots_used,
    };
    let (mean, stderr) = corrected_expectation_c(&bits, &g, &sym_cal, true).unwrap();
    assert!((mean - exact).abs() < 3.0 * stderr, "symmetrized {mean} vs {exact} ± {stderr}");
}

#[test]
fn measured_estimates_track_exact_cost() {
    use qaoa_core::mitigation::{measured_expectation_c, ReadoutMode};
    use qaoa_core::simulator::{qaoa_state, sample_noisy};

    let g = generate(Family::HardwareGrid, 7, 9).unwrap();
    let state = qaoa_state(&g, &QaoaParams::new(vec![0.7], vec![-0.35]).unwrap()).unwrap();
    let exact = expectation_c(&state, &g).unwrap();
    let mut noise = NoiseModel::readout(7, 0.03, 0.09).unwrap();
    let mut r = rng::rng_from_seed(88);
    let cal = calibrate(&noise, 500_000, &mut r).unwrap();
    for mode in [ReadoutMode::Corrected, ReadoutMode::Symmetrized] {
        let (mean, stderr) = measured_expectation_c(&state, &g, 60_000, &noise, mode, Some(&cal), &mut r).unwrap();
        assert!((mean - exact).abs() < 3.0 * stderr, "{mode:?}: {mean} vs {exact} ± {stderr}");
    }
    assert!(measured_expectation_c(&state, &g, 100, &noise, ReadoutMode::Corrected, None, &mut r).is_err());

    // Depolarizing alone scales the raw estimate by f_c.
    noise = NoiseModel { depolarizing_fidelity: Some(0.6), ..NoiseModel::noiseless(7) };
    let (mean, stderr) = measured_expectation_c(&state, &g, 60_000, &noise, ReadoutMode::Raw, None, &mut r).unwrap();
    assert!((mean - 0.6 * exact).abs() < 3.0 * stderr, "{mean} vs {} ± {stderr}", 0.6 * exact);
    assert!(sample_noisy(&state, 10, &NoiseModel::noiseless(3), &mut r).is_err());
}
