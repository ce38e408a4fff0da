use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::Path;

use qaoa_core::analysis::{fit_by_group, read_records, sweep as run_sweep, write_records, SweepConfig};
use qaoa_core::mitigation::{calibrate, estimate_flip_probs, unflip};
use qaoa_core::optimizer::{grid_scan, mgd, optimal_angles, qaoa_log_columns, MgdConfig};
use qaoa_core::problems::{brute_force_min, gen_hardware_grid, generate, Family, HardwareTopology, ProblemGraph, MAX_BRUTE_FORCE_QUBITS};
use qaoa_core::rng::{self, WorkbenchRng};
use qaoa_core::routing::{route, wesn_round, QaoaParams, Strategy};
use qaoa_core::simulator::apply_readout_noise;
use serde_json::{Map, Value};

use crate::error::CliError;
use crate::measure::{noise_model, Estimator};
use crate::output::{read, write_atomic};
use crate::{AngleArgs, CalibrateArgs, CompileArgs, FitNoiseArgs, GenArgs, LandscapeArgs, OptimizeArgs, SweepArgs};

const LANDSCAPE_TAG: u64 = 0x4c53_43;
const DEFAULT_LANDSCAPE_SHOTS: usize = 50_000;
const DEFAULT_OPTIMIZE_SHOTS: usize = 25_000;

fn load_problem(path: &Path) -> Result<ProblemGraph, CliError> {
    Ok(ProblemGraph::from_json(&read(path)?)?)
}

fn topology(arg: &str) -> Result<HardwareTopology, CliError> {
    if arg == "default23" {
        return Ok(HardwareTopology::default23());
    }
    if let Some((r, c)) = arg.split_once('x') {
        if let (Ok(r), Ok(c)) = (r.parse(), c.parse()) {
            return Ok(HardwareTopology::grid(r, c)?);
        }
    }
    let text = read(Path::new(arg))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{arg}: {e}")))
}

pub fn gen(a: &GenArgs) -> Result<(), CliError> {
    let family = Family::parse(&a.family)?;
    let graph = match family {
        Family::HardwareGrid => {
            let topo = match &a.topology {
                Some(t) => topology(t)?,
                None if a.n.is_none() => return Err(CliError::usage("grid instances need --n or --topology")),
                None => HardwareTopology::default23(),
            };
            let topo = match a.n {
                Some(n) => topo.connected_subset(n)?,
                None => topo,
            };
            gen_hardware_grid(&topo, a.seed)?
        }
        _ => {
            if a.topology.is_some() {
                return Err(CliError::usage(format!("--topology applies to grid instances, not {family}")));
            }
            let n = a.n.ok_or_else(|| CliError::usage(format!("--n is required for {family}")))?;
            generate(family, n, a.seed)?
        }
    };
    write_atomic(&a.output, graph.to_json()?.as_bytes())?;
    println!("qubits: {}", graph.n());
    println!("edges: {}", graph.edges().len());
    if graph.n() <= MAX_BRUTE_FORCE_QUBITS {
        println!("c_min: {}", brute_force_min(&graph)?.c_min);
    }
    Ok(())
}

fn resolve_angles(graph: &ProblemGraph, p: usize, a: &AngleArgs, seed: u64) -> Result<QaoaParams, CliError> {
    if p == 0 {
        return Err(CliError::usage("--p must be at least 1"));
    }
    if a.optimal {
        let opt = optimal_angles(graph, p, a.budget, seed)?;
        println!("optimal_ratio: {:.6}", opt.ratio);
        if opt.budget_exhausted {
            println!("warning: refinement budget exhausted; using the best point found");
        }
        return Ok(opt.params);
    }
    match (&a.gamma, &a.beta) {
        (Some(g), Some(b)) if g.len() == p && b.len() == p => Ok(QaoaParams::new(g.clone(), b.clone())?),
        (Some(g), Some(b)) => Err(CliError::usage(format!("p = {p} needs {p} gammas and betas, got {} and {}", g.len(), b.len()))),
        _ => Err(CliError::usage("give --gamma and --beta, or --optimal")),
    }
}

/// SYC layers the router should emit, when a closed form exists.
fn expected_syc_layers(graph: &ProblemGraph, params: &QaoaParams, strategy: Strategy) -> Option<usize> {
    // Angles that make every ZZ the identity compile to nothing.
    let trivial = |g: f64| ((g / PI).round() - g / PI).abs() < 1e-12;
    if params.gamma.iter().any(|&g| trivial(g)) {
        return None;
    }
    let p = params.p();
    match strategy {
        Strategy::Wesn => {
            let topo = graph.topology()?;
            let rounds: BTreeSet<usize> = graph.edges().iter().map(|e| wesn_round(topo, e.j, e.k)).collect();
            Some(2 * rounds.len() * p)
        }
        Strategy::SwapNetwork => Some(3 * graph.n() * p),
        Strategy::Greedy => None,
    }
}

pub fn compile(a: &CompileArgs) -> Result<(), CliError> {
    let graph = load_problem(&a.problem)?;
    let strategy = match &a.strategy {
        Some(s) => Strategy::parse(s)?,
        None => Strategy::default_for(graph.family()),
    };
    if strategy == Strategy::Wesn && graph.family() != Family::HardwareGrid {
        return Err(CliError::usage(format!("strategy wesn needs a grid instance, got {}", graph.family())));
    }
    let params = resolve_angles(&graph, a.p, &a.angles, a.seed)?;
    let routed = route(&graph, &params, strategy, &HardwareTopology::default23())?;
    write_atomic(&a.output, routed.to_json()?.as_bytes())?;

    let layers = routed.circuit.syc_layers();
    println!("strategy: {}", strategy.as_str());
    println!("qubits: {}", routed.circuit.n_qubits());
    println!("syc_count: {}", routed.circuit.syc_count());
    println!("syc_layers: {layers}");
    println!("moments: {}", routed.circuit.moments().len());
    match expected_syc_layers(&graph, &params, strategy) {
        Some(want) if want == layers => println!("check: ok ({want} SYC layers expected)"),
        Some(want) => return Err(CliError::CheckFailed(format!("expected {want} SYC layers, emitted {layers}"))),
        None => println!("check: n/a"),
    }
    Ok(())
}

fn cell_stream(seed: u64, gamma: f64, beta: f64) -> WorkbenchRng {
    rng::stream(LANDSCAPE_TAG, gamma.to_bits() ^ beta.to_bits().rotate_left(29), seed)
}

pub fn landscape(a: &LandscapeArgs) -> Result<(), CliError> {
    if a.resolution < 2 {
        return Err(CliError::usage("--resolution must be at least 2"));
    }
    let graph = load_problem(&a.problem)?;
    let est = Estimator::new(&graph, &a.noise, DEFAULT_LANDSCAPE_SHOTS, a.seed)?;
    let grid = grid_scan(
        |g, b| est.ratio_vec(&[g, b], &mut cell_stream(a.seed, g, b)),
        a.gamma_range,
        a.beta_range,
        a.resolution,
    )?;
    if grid.values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(qaoa_core::Error::Numerical("non-finite landscape value".into()).into());
    }
    write_atomic(&a.output, grid.to_csv().as_bytes())?;
    println!("mode: {}", est.describe());
    println!("points: {}", a.resolution * a.resolution);
    if a.argmax {
        let (i, j, v) = grid.argmax();
        println!("argmax: gamma={:.6} beta={:.6} ratio={v:.6}", grid.gamma_axis[i], grid.beta_axis[j]);
    }
    Ok(())
}

pub fn optimize(a: &OptimizeArgs) -> Result<(), CliError> {
    if a.p == 0 {
        return Err(CliError::usage("--p must be at least 1"));
    }
    let graph = load_problem(&a.problem)?;
    let est = Estimator::new(&graph, &a.noise, DEFAULT_OPTIMIZE_SHOTS, a.seed)?;
    let d = MgdConfig::default();
    let cfg = MgdConfig {
        learning_rate: a.learning_rate.unwrap_or(d.learning_rate),
        sample_radius: a.sample_radius.unwrap_or(d.sample_radius),
        sample_count: a.sample_count.unwrap_or(d.sample_count),
        rate_decay_exponent: a.rate_decay_exponent.unwrap_or(d.rate_decay_exponent),
        stability_constant: a.stability_constant.unwrap_or(d.stability_constant),
        radius_decay_exponent: a.radius_decay_exponent.unwrap_or(d.radius_decay_exponent),
        tolerance: a.tolerance.unwrap_or(d.tolerance),
        max_evaluations: a.max_evaluations.unwrap_or(d.max_evaluations),
    };
    cfg.validate()?;
    let x0 = match &a.x0 {
        Some(x) if x.len() == 2 * a.p => x.clone(),
        Some(x) => return Err(CliError::usage(format!("--x0 needs {} values, got {}", 2 * a.p, x.len()))),
        None => [vec![0.15; a.p], vec![-0.15; a.p]].concat(),
    };
    let res = mgd(|x, r| -est.ratio_vec(x, r), &x0, &cfg, &mut rng::rng_from_seed(a.seed))?;
    write_atomic(&a.output, res.log_csv(&qaoa_log_columns(a.p)).as_bytes())?;
    let best = QaoaParams::from_slice(&res.x)?;
    println!("mode: {}", est.describe());
    println!("evaluations: {}", res.log.len());
    println!("iterations: {}", res.iterations);
    println!("converged: {}", res.converged);
    println!("gamma: {}", join(&best.gamma));
    println!("beta: {}", join(&best.beta));
    println!("ratio_noiseless: {:.6}", est.exact_ratio(&best)?);
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(",")
}

pub fn sweep(a: &SweepArgs) -> Result<(), CliError> {
    let families = a
        .families
        .split(',')
        .map(|f| Family::parse(f.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = SweepConfig {
        families,
        sizes: a.sizes.iter().map(|&n| n as usize).collect(),
        p_max: a.p_max,
        seeds: a.seeds.clone(),
        budget: a.budget,
        two_qubit_fidelity: a.two_qubit_fidelity,
    };
    let records = run_sweep(&cfg)?;
    let mut buf = Vec::new();
    write_records(&mut buf, &records)?;
    write_atomic(&a.output, &buf)?;
    println!("records: {}", records.len());
    Ok(())
}

pub fn fit_noise(a: &FitNoiseArgs) -> Result<(), CliError> {
    let records = read_records(read(&a.records)?.as_bytes())?;
    let family = a.family.as_deref().map(Family::parse).transpose()?;
    let kept: Vec<_> = records
        .into_iter()
        .filter(|r| family.is_none_or(|f| r.family == f) && a.p.is_none_or(|p| r.p == p))
        .collect();
    if kept.is_empty() {
        return Err(CliError::usage("no records match the filters"));
    }
    let mut fits = Vec::new();
    for ((family, p), fit) in fit_by_group(&kept) {
        let fit = fit?;
        println!(
            "{family} p={p}: f={:.6} f0={:.6} r2={:.4} used={} excluded={}",
            fit.f(),
            fit.f0(),
            fit.r_squared,
            fit.used,
            fit.excluded
        );
        fits.push((format!("{family}:{p}"), serde_json::from_str::<Value>(&fit.to_json()?).map_err(qaoa_core::Error::from)?));
    }
    let json = if fits.len() == 1 {
        fits.pop().expect("one fit").1
    } else {
        Value::Object(fits.into_iter().collect::<Map<_, _>>())
    };
    write_atomic(&a.output, json.to_string().as_bytes())?;
    Ok(())
}

pub fn calibrate_readout(a: &CalibrateArgs) -> Result<(), CliError> {
    if a.n == 0 || a.n > 64 {
        return Err(CliError::usage("--n must be in 1..=64"));
    }
    if a.shots == 0 {
        return Err(CliError::usage("--shots must be positive"));
    }
    let noise = noise_model(&Some(a.p0.clone()), &Some(a.p1.clone()), None, a.n)?;
    let mut r = rng::rng_from_seed(a.seed);
    let cal = if a.symmetrized {
        let ones = if a.n == 64 { u64::MAX } else { (1u64 << a.n) - 1 };
        let half = a.shots / 2;
        let prepared = |state: u64, r: &mut WorkbenchRng| {
            let mut bits = apply_readout_noise(&vec![state; half], &noise, r);
            bits.extend(unflip(&apply_readout_noise(&vec![state ^ ones; a.shots - half], &noise, r), a.n));
            bits
        };
        let zero = prepared(0, &mut r);
        let one = prepared(ones, &mut r);
        let mut cal = estimate_flip_probs(&zero, &one, a.n)?;
        cal.shots_used = a.shots;
        cal
    } else {
        calibrate(&noise, a.shots, &mut r)?
    };
    write_atomic(&a.output, cal.to_json()?.as_bytes())?;
    for q in 0..a.n {
        println!("qubit {q}: p0={:.6} p1={:.6}", cal.p0[q], cal.p1[q]);
    }
    Ok(())
}
