use qaoa_core::problems::{gen_3regular, gen_sk, generate, Family, HardwareTopology, ProblemGraph};
use qaoa_core::rng;
use qaoa_core::routing::{build_qaoa_abstract, route, route_greedy, QaoaParams, RoutedCircuit, Strategy};
use qaoa_core::simulator::evolve;

fn params(p: usize, seed: u64) -> QaoaParams {
    let mut g = rng::rng_from_seed(seed);
    let gamma = (0..p).map(|_| (rng::unit_f64(&mut g) - 0.5) * 3.0).collect();
    let beta = (0..p).map(|_| (rng::unit_f64(&mut g) - 0.5) * 1.5).collect();
    QaoaParams::new(gamma, beta).unwrap()
}

fn total_variation(r: &RoutedCircuit, g: &ProblemGraph, params: &QaoaParams) -> f64 {
    let routed = evolve(&r.circuit, None).unwrap().relabeled(&r.logical_to_physical_final).unwrap();
    let reference = evolve(&build_qaoa_abstract(g, params).unwrap(), None).unwrap();
    routed
        .probabilities()
        .iter()
        .zip(reference.probabilities())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / 2.0
}

fn check(strategy: Strategy, make: impl Fn(u64) -> ProblemGraph) {
    let topo = HardwareTopology::default23();
    for seed in 0..20u64 {
        let g = make(seed);
        let p = 1 + (seed % 2) as usize;
        let pr = params(p, seed);
        let r = route(&g, &pr, strategy, &topo).unwrap();
        let tv = total_variation(&r, &g, &pr);
        assert!(tv < 1e-8, "{strategy:?} seed {seed} n {}: tv {tv:e}", g.n());
        assert!(r.circuit.gates().all(|x| matches!(
            x.kind(),
            qaoa_core::circuit::GateKind::PhX { .. }
                | qaoa_core::circuit::GateKind::Rz(_)
                | qaoa_core::circuit::GateKind::Syc
                | qaoa_core::circuit::GateKind::Measure
        )));
        let back = RoutedCircuit::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back.circuit, r.circuit);
        assert_eq!(back.logical_to_physical_final, r.logical_to_physical_final);
    }
}

#[test]
fn wesn_matches_abstract() {
    check(Strategy::Wesn, |s| generate(Family::HardwareGrid, 4 + (s as usize % 9), s).unwrap());
}

#[test]
fn swap_network_matches_abstract() {
    check(Strategy::SwapNetwork, |s| gen_sk(3 + (s as usize % 8), s).unwrap());
}

#[test]
fn greedy_matches_abstract() {
    check(Strategy::Greedy, |s| gen_3regular(4 + 2 * (s as usize % 4), s).unwrap());
    check(Strategy::Greedy, |s| gen_sk(3 + (s as usize % 5), s).unwrap());
}

#[test]
fn maxcut_is_cheaper_than_full_network() {
    let topo = HardwareTopology::default23();
    let g = gen_3regular(14, 3).unwrap();
    let pr = params(1, 1);
    let greedy = route_greedy(&g, &topo, &pr).unwrap();
    let sk = gen_sk(14, 3).unwrap();
    let full = route(&sk, &pr, Strategy::SwapNetwork, &topo).unwrap();
    assert!(greedy.circuit.syc_count() < full.circuit.syc_count());
}

#[test]
fn sk_layers_scale_with_n() {
    let topo = HardwareTopology::default23();
    let g = gen_sk(17, 2).unwrap();
    let r = route(&g, &params(1, 4), Strategy::SwapNetwork, &topo).unwrap();
    assert_eq!(r.circuit.syc_layers(), 3 * 17);
}
