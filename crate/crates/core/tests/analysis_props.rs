use proptest::prelude::*;
use qaoa_core::analysis::{
    approximation_ratio, edge_distance, fit_depolarizing, fit_log_linear, lightcone_check, RunRecord,
};
use qaoa_core::error::Error;
use qaoa_core::problems::{generate, Family, ProblemGraph};
use qaoa_core::rng;
use qaoa_core::routing::QaoaParams;
use qaoa_core::simulator::depolarized_expectation;

fn record(n: usize, noiseless: f64, observed: f64) -> RunRecord {
    RunRecord {
        instance: format!("sk-{n}-0"),
        family: Family::SkModel,
        n,
        p: 1,
        ratio_noiseless: noiseless,
        ratio_observed: observed,
        two_qubit_gate_count: 0,
        shots: 0,
    }
}

/// Log-fidelity samples `n log f + log f0 + σ ε` for `n = 4..=17`, three per size.
fn noisy_points(log_f: f64, log_f0: f64, sigma: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut r = rng::rng_from_seed(seed);
    (4..=17)
        .flat_map(|n| std::iter::repeat(n).take(3))
        .map(|n| {
            let n = n as f64;
            (n, (n * log_f + log_f0 + sigma * rng::standard_normal(&mut r)).exp())
        })
        .collect()
}

fn grid_instance() -> impl Strategy<Value = ProblemGraph> {
    (10usize..=16, any::<u64>()).prop_map(|(n, seed)| generate(Family::HardwareGrid, n, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ratio_is_linear_in_fidelity(v in -50.0f64..50.0, f in 0.0f64..=1.0, c_min in -200i64..-1) {
        let c = c_min as f64;
        let lhs = approximation_ratio(depolarized_expectation(v, f).unwrap(), c).unwrap();
        let rhs = f * approximation_ratio(v, c).unwrap();
        prop_assert!((lhs - rhs).abs() <= 2.0 * f64::EPSILON * rhs.abs());
    }

    #[test]
    fn exponential_data_is_fit_exactly(f in 0.5f64..1.0, f0 in 0.3f64..=1.0, lo in 2usize..8, count in 2usize..12) {
        let records: Vec<RunRecord> = (lo..lo + count)
            .map(|n| record(n, 0.8, 0.8 * f.powi(n as i32) * f0))
            .collect();
        let fit = fit_depolarizing(&records).unwrap();
        prop_assert!((fit.log_f - f.ln()).abs() < 1e-12);
        prop_assert!((fit.log_f0 - f0.ln()).abs() < 1e-12);
        prop_assert!((fit.r_squared - 1.0).abs() < 1e-12);
        prop_assert_eq!(fit.excluded, 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flips_outside_the_lightcone_are_invisible(
        g in grid_instance(),
        p in 1usize..=2,
        pick in any::<usize>(),
        seed in any::<u64>(),
    ) {
        let e = g.edges()[pick % g.edges().len()];
        let edge = (e.j, e.k);
        let outside: Vec<(usize, usize)> = g
            .edges()
            .iter()
            .map(|x| (x.j, x.k))
            .filter(|&x| edge_distance(&g, edge, x) > p)
            .collect();
        prop_assume!(!outside.is_empty());
        let mut r = rng::rng_from_seed(seed);
        let gamma = (0..p).map(|_| 3.0 * rng::unit_f64(&mut r) - 1.5).collect();
        let beta = (0..p).map(|_| 1.5 * rng::unit_f64(&mut r) - 0.75).collect();
        let params = QaoaParams::new(gamma, beta).unwrap();
        let report = lightcone_check(&g, &params, edge, &outside).unwrap();
        prop_assert!(report.max_deviation() < 1e-12, "deviation {}", report.max_deviation());
    }

    #[test]
    fn flips_inside_the_lightcone_are_rejected(g in grid_instance(), p in 1usize..=3, pick in any::<usize>()) {
        let e = g.edges()[pick % g.edges().len()];
        let edge = (e.j, e.k);
        let inside: Vec<(usize, usize)> = g
            .edges()
            .iter()
            .map(|x| (x.j, x.k))
            .filter(|&x| edge_distance(&g, edge, x) < p)
            .collect();
        let params = QaoaParams::new(vec![0.3; p], vec![0.2; p]).unwrap();
        for x in inside {
            let err = lightcone_check(&g, &params, edge, &[x]).unwrap_err();
            prop_assert!(matches!(err, Error::Precondition(_)));
        }
    }
}

#[test]
fn lognormal_noise_slope_within_three_standard_errors() {
    let (log_f, log_f0) = (0.93f64.ln(), 0.9f64.ln());
    let trials = 200;
    let mut inside = 0;
    for seed in 0..trials {
        let fit = fit_log_linear(&noisy_points(log_f, log_f0, 0.05, seed)).unwrap();
        if (fit.log_f - log_f).abs() < 3.0 * fit.log_f_stderr {
            inside += 1;
        }
        if seed < 10 {
            assert!((fit.log_f - log_f).abs() < 3.0 * fit.log_f_stderr, "seed {seed}");
        }
    }
    // two-sided 3σ coverage is 99.7%; allow for t tails and Monte-Carlo error
    assert!(inside as f64 / trials as f64 >= 0.97, "coverage {inside}/{trials}");
}

#[test]
fn size_independent_ratio_gives_flat_slope() {
    for seed in 0..10 {
        let fit = fit_log_linear(&noisy_points(0.0, 0.7f64.ln(), 0.05, 100 + seed)).unwrap();
        assert!(fit.log_f.abs() < 3.0 * fit.log_f_stderr, "seed {seed}: slope {}", fit.log_f);
        assert!(fit.r_squared < 0.5);
    }
}

#[test]
fn distance_exactly_p_is_reported() {
    let g = generate(Family::HardwareGrid, 12, 4).unwrap();
    let params = QaoaParams::new(vec![0.4], vec![-0.3]).unwrap();
    let e = g.edges()[0];
    let at_p: Vec<(usize, usize)> =
        g.edges().iter().map(|x| (x.j, x.k)).filter(|&x| edge_distance(&g, (e.j, e.k), x) == 1).collect();
    assert!(!at_p.is_empty());
    let report = lightcone_check(&g, &params, (e.j, e.k), &at_p).unwrap();
    assert_eq!(report.perturbations.len(), at_p.len());
    assert!(report.perturbations.iter().all(|x| x.distance == 1 && x.deviation.is_finite()));
}
