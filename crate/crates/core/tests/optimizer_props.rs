use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qaoa_core::optimizer::{
    fit_quadratic, grid_scan, mgd, optimal_angles, Evaluation, MgdConfig, RatioObjective, BETA_RANGE, GAMMA_RANGE,
    LANDSCAPE_RESOLUTION,
};
use qaoa_core::problems::{gen_sk, generate, Family};
use qaoa_core::rng;

fn noisy_bowl(x: &[f64], r: &mut rng::WorkbenchRng) -> f64 {
    (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.1).powi(2) + 0.01 * rng::standard_normal(r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evaluation_budget_is_never_exceeded(
        n_max in 1usize..200,
        k in 1usize..12,
        radius in 0.01f64..1.0,
        seed in any::<u64>(),
    ) {
        let calls = AtomicUsize::new(0);
        let cfg = MgdConfig { max_evaluations: n_max, sample_count: k, sample_radius: radius, ..MgdConfig::default() };
        let res = mgd(
            |x, r| {
                calls.fetch_add(1, Ordering::Relaxed);
                noisy_bowl(x, r)
            },
            &[1.0, -1.0],
            &cfg,
            &mut rng::rng_from_seed(seed),
        )
        .unwrap();
        let used = calls.load(Ordering::Relaxed);
        prop_assert!(used <= n_max);
        prop_assert_eq!(used, res.log.len());
        if n_max < k + 1 {
            prop_assert_eq!(used, 0);
            prop_assert_eq!(res.x, vec![1.0, -1.0]);
        }
    }

    #[test]
    fn deterministic_per_seed(seed in any::<u64>()) {
        let cfg = MgdConfig { max_evaluations: 140, ..MgdConfig::default() };
        let a = mgd(noisy_bowl, &[0.8, 0.5], &cfg, &mut rng::rng_from_seed(seed)).unwrap();
        let b = mgd(noisy_bowl, &[0.8, 0.5], &cfg, &mut rng::rng_from_seed(seed)).unwrap();
        prop_assert_eq!(a, b);
    }
}

/// On `|x - x*|²` the fitted model is exact, so each step scales the error
/// by `1 - 2γ'_m` regardless of the sampled points.
fn contraction(cfg: &MgdConfig, iterations: usize) -> f64 {
    (0..iterations)
        .map(|m| 1.0 - 2.0 * cfg.learning_rate / ((m + 1) as f64 + cfg.stability_constant).powf(cfg.rate_decay_exponent))
        .product()
}

#[test]
fn convex_quadratic_converges_within_120_evaluations() {
    let target = [0.4, -0.7];
    let cfg = MgdConfig { max_evaluations: 120, ..MgdConfig::default() };
    for (seed, x0) in [[0.3, -0.6], [0.5, -0.8], [0.52, -0.7], [0.4, -0.58]].into_iter().enumerate() {
        let res = mgd(
            |x, _| (x[0] - target[0]).powi(2) + (x[1] - target[1]).powi(2),
            &x0,
            &cfg,
            &mut rng::rng_from_seed(seed as u64),
        )
        .unwrap();
        let d0 = ((x0[0] - target[0]).powi(2) + (x0[1] - target[1]).powi(2)).sqrt();
        let dist = ((res.x[0] - target[0]).powi(2) + (res.x[1] - target[1]).powi(2)).sqrt();
        assert!(res.log.len() <= 120);
        assert!((dist - d0 * contraction(&cfg, res.iterations)).abs() < 1e-9, "seed {seed}: {dist} vs {} after {} iterations, converged {}", d0 * contraction(&cfg, res.iterations), res.iterations, res.converged);
        assert!(dist < 1e-2, "seed {seed}: distance {dist}");
    }
}

#[test]
fn convex_quadratic_follows_the_step_schedule_from_afar() {
    let cfg = MgdConfig { max_evaluations: 400, ..MgdConfig::default() };
    let res = mgd(|x, _| x[0] * x[0] + x[1] * x[1], &[1.0, -0.5], &cfg, &mut rng::rng_from_seed(9)).unwrap();
    let d0 = 1.25f64.sqrt();
    let dist = (res.x[0].powi(2) + res.x[1].powi(2)).sqrt();
    assert!((dist - d0 * contraction(&cfg, res.iterations)).abs() < 1e-9);
    assert!(dist < 1e-2);
}

#[test]
fn noisy_linear_data_fits_flat_curvature() {
    let (slope, sigma) = ([0.7, -1.3], 0.05);
    let mut r = rng::rng_from_seed(11);
    let pts: Vec<Evaluation> = (0..400)
        .map(|_| {
            let x = vec![2.0 * rng::unit_f64(&mut r) - 1.0, 2.0 * rng::unit_f64(&mut r) - 1.0];
            let value = 0.2 + slope[0] * x[0] + slope[1] * x[1] + sigma * rng::standard_normal(&mut r);
            Evaluation { x, value }
        })
        .collect();
    let model = fit_quadratic(&pts).unwrap();

    // Coefficient covariance σ² (AᵀA)⁻¹ of the same centered design.
    let c: Vec<f64> = (0..2).map(|d| pts.iter().map(|p| p.x[d]).sum::<f64>() / pts.len() as f64).collect();
    let rows: Vec<[f64; 6]> = pts
        .iter()
        .map(|p| {
            let (u, v) = (p.x[0] - c[0], p.x[1] - c[1]);
            [1.0, u, v, u * u, u * v, v * v]
        })
        .collect();
    let a = DMatrix::from_fn(rows.len(), 6, |i, j| rows[i][j]);
    let cov = (a.transpose() * &a).try_inverse().unwrap() * (sigma * sigma);
    let se = DVector::from_fn(6, |i, _| cov[(i, i)].sqrt());

    let b = model.gradient();
    assert!((b[0] - slope[0]).abs() < 4.0 * se[1], "b0 = {}", b[0]);
    assert!((b[1] - slope[1]).abs() < 4.0 * se[2], "b1 = {}", b[1]);
    let q = &model.quadratic;
    assert!(q[(0, 0)].abs() < 4.0 * se[3]);
    assert!((2.0 * q[(0, 1)]).abs() < 4.0 * se[4]);
    assert!(q[(1, 1)].abs() < 4.0 * se[5]);
}

#[test]
fn zero_angle_lines_are_exactly_zero() {
    let g = generate(Family::HardwareGrid, 8, 3).unwrap();
    let obj = RatioObjective::new(&g).unwrap();
    let grid = obj.landscape((0.0, 1.5), (-1.0, 1.0), 21).unwrap();
    assert_eq!(grid.gamma_axis[0], 0.0);
    let zero_beta = grid.beta_axis.iter().position(|&b| b == 0.0).expect("beta axis contains 0");
    for i in 0..21 {
        assert_eq!(grid.values[0][i], 0.0);
        assert_eq!(grid.values[i][zero_beta], 0.0);
    }
}

#[test]
fn single_edge_argmax_matches_refinement() {
    for seed in 0..4 {
        let g = gen_sk(2, seed).unwrap();
        let obj = RatioObjective::new(&g).unwrap();
        let coarse = obj.landscape(GAMMA_RANGE, BETA_RANGE, LANDSCAPE_RESOLUTION).unwrap();
        let fine = grid_scan(
            |gm, b| obj.ratio_vec(&[gm, b]),
            GAMMA_RANGE,
            BETA_RANGE,
            500,
        )
        .unwrap();
        let (ci, cj, _) = coarse.argmax();
        let (fi, fj, _) = fine.argmax();
        let dg = (GAMMA_RANGE.1 - GAMMA_RANGE.0) / (LANDSCAPE_RESOLUTION - 1) as f64;
        let db = (BETA_RANGE.1 - BETA_RANGE.0) / (LANDSCAPE_RESOLUTION - 1) as f64;
        assert!((coarse.gamma_axis[ci] - fine.gamma_axis[fi]).abs() <= dg + 1e-12);
        assert!((coarse.beta_axis[cj] - fine.beta_axis[fj]).abs() <= db + 1e-12);
    }
}

#[test]
fn refinement_never_loses_to_grid() {
    for seed in 0..3 {
        let g = gen_sk(2, seed).unwrap();
        let obj = RatioObjective::new(&g).unwrap();
        let (_, _, cell) = obj.landscape(GAMMA_RANGE, BETA_RANGE, LANDSCAPE_RESOLUTION).unwrap().argmax();
        let refined = optimal_angles(&g, 1, 200, seed).unwrap();
        assert!(refined.ratio >= cell);
        assert!((obj.ratio(&refined.params).unwrap() - refined.ratio).abs() < 1e-12);
    }
}
