//! Approximation ratios, the log-linear depolarizing fit and a lightcone probe.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::optimizer::optimal_angles_upto;
use crate::problems::{generate, Family, HardwareTopology, ProblemGraph, MAX_BRUTE_FORCE_QUBITS};
use crate::routing::{route, QaoaParams, Strategy};
use crate::simulator::{depolarized_expectation, expectation_zz, qaoa_state, DEVICE_TWO_QUBIT_FIDELITY, MAX_SIM_QUBITS};

/// `⟨C⟩ / C_min`; 1 is optimal and 0 is random guessing.
pub fn approximation_ratio(expect_c: f64, c_min: f64) -> Result<f64> {
    if !(c_min < 0.0) {
        return Err(Error::Domain(format!("C_min must be negative, got {c_min}")));
    }
    Ok(expect_c / c_min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub ratio_noiseless: f64,
    pub ratio_observed: f64,
    #[serde(rename = "gates2q")]
    pub two_qubit_gate_count: usize,
    pub shots: usize,
}

impl RunRecord {
    fn check(&self) -> Result<()> {
        if !self.ratio_noiseless.is_finite() || !self.ratio_observed.is_finite() {
            return Err(Error::Invalid(format!("non-finite ratio in record {}", self.instance)));
        }
        Ok(())
    }
}

pub fn read_records<R: std::io::Read>(reader: R) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let r: RunRecord = row.map_err(|e| Error::Invalid(format!("records CSV: {e}")))?;
        r.check()?;
        out.push(r);
    }
    Ok(out)
}

pub fn write_records<W: std::io::Write>(writer: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(|e| Error::Invalid(format!("records CSV: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// `log f_c = n·log f + log f0` by ordinary least squares.
#[derive(Debug, Clone, PartialEq)]
pub struct DepolarizingFit {
    pub log_f: f64,
    pub log_f0: f64,
    pub r_squared: f64,
    pub log_f_stderr: f64,
    pub log_f0_stderr: f64,
    /// Points used in the regression.
    pub used: usize,
    /// Records dropped for a non-positive fidelity ratio.
    pub excluded: usize,
}

#[derive(Serialize, Deserialize)]
struct FitFile {
    f: f64,
    f0: f64,
    r2: f64,
    excluded: usize,
}

impl DepolarizingFit {
    pub fn f(&self) -> f64 {
        self.log_f.exp()
    }

    pub fn f0(&self) -> f64 {
        self.log_f0.exp()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&FitFile { f: self.f(), f0: self.f0(), r2: self.r_squared, excluded: self.excluded })?)
    }
}

/// Fit over `(n, f_c)` pairs. Pairs with `f_c <= 0` or non-finite are
/// excluded and counted.
pub fn fit_log_linear(points: &[(f64, f64)]) -> Result<DepolarizingFit> {
    let used: Vec<(f64, f64)> = points.iter().filter(|(_, f)| *f > 0.0 && f.is_finite()).map(|&(n, f)| (n, f.ln())).collect();
    let excluded = points.len() - used.len();
    if used.is_empty() {
        return Err(Error::Fit(format!("all {excluded} records excluded")));
    }
    let m = used.len() as f64;
    let xbar = used.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = used.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = used.iter().map(|p| (p.0 - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("need at least two distinct n values".into()));
    }
    let sxy: f64 = used.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = used.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let ss_tot: f64 = used.iter().map(|p| (p.1 - ybar).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let (se_slope, se_int) = if used.len() > 2 {
        let s2 = ss_res / (m - 2.0);
        let sumx2: f64 = used.iter().map(|p| p.0 * p.0).sum();
        ((s2 / sxx).sqrt(), (s2 * sumx2 / (m * sxx)).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(DepolarizingFit {
        log_f: slope,
        log_f0: intercept,
        r_squared,
        log_f_stderr: se_slope,
        log_f0_stderr: se_int,
        used: used.len(),
        excluded,
    })
}

/// Fit of `ratio_observed / ratio_noiseless` against `n` for one record set.
pub fn fit_depolarizing(records: &[RunRecord]) -> Result<DepolarizingFit> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| {
            let fc = if r.ratio_noiseless != 0.0 { r.ratio_observed / r.ratio_noiseless } else { f64::NAN };
            (r.n as f64, fc)
        })
        .collect();
    fit_log_linear(&pts)
}

/// One fit per `(family, p)` group.
pub fn fit_by_group(records: &[RunRecord]) -> BTreeMap<(Family, usize), Result<DepolarizingFit>> {
    let mut groups: BTreeMap<(Family, usize), Vec<RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.family, r.p)).or_default().push(r.clone());
    }
    groups.into_iter().map(|(k, rs)| (k, fit_depolarizing(&rs))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub edge: (usize, usize),
    /// Hops from the nearer endpoint to the nearer of `i`, `j`.
    pub distance: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LightconeReport {
    pub baseline: f64,
    pub perturbations: Vec<Perturbation>,
    /// Change when every listed weight is flipped together.
    pub joint_deviation: f64,
}

impl LightconeReport {
    pub fn max_deviation(&self) -> f64 {
        self.perturbations.iter().map(|p| p.deviation).fold(self.joint_deviation, f64::max)
    }
}

/// Hop distance of edge `(a, b)` from the pair `{i, j}`.
pub fn edge_distance(graph: &ProblemGraph, (i, j): (usize, usize), (a, b): (usize, usize)) -> usize {
    let di = graph.distances_from(i);
    let dj = graph.distances_from(j);
    [di[a], di[b], dj[a], dj[b]].into_iter().min().unwrap_or(usize::MAX)
}

/// Flips each listed weight and measures the change in `⟨Z_i Z_j⟩` at fixed
/// angles. Edges closer than `p` hops are rejected; edges exactly `p` hops
/// away are measured but carry no guarantee.
pub fn lightcone_check(
    graph: &ProblemGraph,
    params: &QaoaParams,
    edge: (usize, usize),
    perturb: &[(usize, usize)],
) -> Result<LightconeReport> {
    if graph.family() != Family::HardwareGrid {
        return Err(Error::FamilyMismatch(format!("lightcone probe needs a grid instance, got {}", graph.family().as_str())));
    }
    let p = params.p();
    let (i, j) = edge;
    if i >= graph.n() || j >= graph.n() || i == j {
        return Err(Error::Invalid(format!("bad observable pair ({i}, {j})")));
    }
    let mut dists = Vec::with_capacity(perturb.len());
    for &e in perturb {
        if e.0 >= graph.n() || e.1 >= graph.n() {
            return Err(Error::Invalid(format!("bad perturbation edge ({}, {})", e.0, e.1)));
        }
        let d = edge_distance(graph, edge, e);
        if d < p {
            return Err(Error::Precondition(format!(
                "edge ({}, {}) is {d} hops from ({i}, {j}), inside the depth-{p} lightcone",
                e.0, e.1
            )));
        }
        dists.push(d);
    }
    let zz = |g: &ProblemGraph| -> Result<f64> { expectation_zz(&qaoa_state(g, params)?, i, j) };
    let baseline = zz(graph)?;
    let items: Vec<((usize, usize), usize)> = perturb.iter().copied().zip(dists).collect();
    let perturbations = par::map_collect(items, |(e, distance)| {
        let v = graph.with_flipped_weight(e.0, e.1).and_then(|g| zz(&g))?;
        Ok(Perturbation { edge: e, distance, deviation: (v - baseline).abs() })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut joint = graph.clone();
    for &e in perturb {
        joint = joint.with_flipped_weight(e.0, e.1)?;
    }
    let joint_deviation = (zz(&joint)? - baseline).abs();
    Ok(LightconeReport { baseline, perturbations, joint_deviation })
}

/// Settings for a noiseless sweep with a gate-count depolarizing surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub families: Vec<Family>,
    pub sizes: Vec<usize>,
    pub p_max: usize,
    pub seeds: Vec<u64>,
    /// MGD evaluations per refinement run.
    pub budget: usize,
    /// Fidelity per SYC gate; the circuit fidelity is this to the SYC count.
    pub two_qubit_fidelity: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            families: vec![Family::HardwareGrid],
            sizes: vec![4, 6, 8],
            p_max: 3,
            seeds: (1..=10).collect(),
            budget: 400,
            two_qubit_fidelity: DEVICE_TWO_QUBIT_FIDELITY,
        }
    }
}

/// One record per `(family, n, seed, p)` with the noiseless optimum and its
/// surrogate-degraded value. Sizes a family cannot realize are skipped.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<RunRecord>> {
    if cfg.p_max == 0 {
        return Err(Error::Invalid("p_max must be >= 1".into()));
    }
    if !(cfg.two_qubit_fidelity > 0.0 && cfg.two_qubit_fidelity <= 1.0) {
        return Err(Error::Invalid(format!("two-qubit fidelity must be in (0, 1], got {}", cfg.two_qubit_fidelity)));
    }
    let mut jobs = Vec::new();
    for &family in &cfg.families {
        for &n in &cfg.sizes {
            if n > MAX_BRUTE_FORCE_QUBITS.min(MAX_SIM_QUBITS) {
                return Err(Error::Resource(format!("sweep size {n} exceeds the exact simulator")));
            }
            let valid = match family {
                Family::HardwareGrid => (2..=HardwareTopology::default23().len()).contains(&n),
                Family::SkModel => n >= 2,
                Family::ThreeRegular => n >= 4 && n % 2 == 0,
            };
            if valid {
                jobs.extend(cfg.seeds.iter().map(|&s| (family, n, s)));
            }
        }
    }
    let per_instance = par::map_collect(jobs, |(family, n, seed)| -> Result<Vec<RunRecord>> {
        let graph = generate(family, n, seed)?;
        let topo = HardwareTopology::default23();
        let chain = optimal_angles_upto(&graph, cfg.p_max, cfg.budget, seed)?;
        chain
            .into_iter()
            .enumerate()
            .map(|(i, opt)| {
                let routed = route(&graph, &opt.params, Strategy::default_for(family), &topo)?;
                let syc = routed.circuit.syc_count();
                let fc = cfg.two_qubit_fidelity.powi(syc as i32);
                Ok(RunRecord {
                    instance: format!("{}-{n}-{seed}", family.as_str()),
                    family,
                    n,
                    p: i + 1,
                    ratio_noiseless: opt.ratio,
                    ratio_observed: depolarized_expectation(opt.ratio, fc)?,
                    two_qubit_gate_count: syc,
                    shots: 0,
                })
            })
            .collect()
    });
    let mut out = Vec::new();
    for r in per_instance {
        out.extend(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{gen_hardware_grid, HardwareTopology};

    #[test]
    fn ratio_basics() {
        assert_eq!(approximation_ratio(-7.0, -7.0).unwrap(), 1.0);
        assert_eq!(approximation_ratio(0.0, -3.0).unwrap(), 0.0);
        assert!(matches!(approximation_ratio(1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn exact_exponential_fit() {
        let pts: Vec<(f64, f64)> = (2..12).map(|n| (n as f64, 0.9f64.powi(n) * 0.95)).collect();
        let f = fit_log_linear(&pts).unwrap();
        assert!((f.log_f - 0.9f64.ln()).abs() < 1e-12);
        assert!((f.log_f0 - 0.95f64.ln()).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(f.excluded, 0);
    }

    #[test]
    fn exclusions_and_errors() {
        let f = fit_log_linear(&[(2.0, 0.5), (3.0, -0.1), (4.0, 0.25)]).unwrap();
        assert_eq!(f.excluded, 1);
        assert!(matches!(fit_log_linear(&[(2.0, -1.0)]), Err(Error::Fit(_))));
        assert!(matches!(fit_log_linear(&[(2.0, 0.5), (2.0, 0.4)]), Err(Error::Fit(_))));
    }

    #[test]
    fn records_round_trip() {
        let r = RunRecord {
            instance: "grid-6-1".into(),
            family: Family::HardwareGrid,
            n: 6,
            p: 1,
            ratio_noiseless: 0.6,
            ratio_observed: 0.4,
            two_qubit_gate_count: 14,
            shots: 25000,
        };
        let mut buf = Vec::new();
        write_records(&mut buf, std::slice::from_ref(&r)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("instance,family,n,p,ratio_noiseless,ratio_observed,gates2q,shots\n"));
        assert_eq!(read_records(&buf[..]).unwrap(), vec![r]);
    }

    #[test]
    fn small_sweep() {
        let cfg = SweepConfig {
            families: vec![Family::SkModel, Family::ThreeRegular],
            sizes: vec![3, 4],
            p_max: 2,
            seeds: vec![1, 2],
            budget: 100,
            ..SweepConfig::default()
        };
        let recs = sweep(&cfg).unwrap();
        // SK at n = 3, 4 and 3-regular at n = 4
        assert_eq!(recs.len(), 3 * 2 * 2);
        for r in &recs {
            assert!(r.ratio_noiseless > 0.0 && r.ratio_noiseless <= 1.0 + 1e-12);
            assert!(r.ratio_observed < r.ratio_noiseless);
        }
    }

    #[test]
    fn lightcone_line() {
        let g = gen_hardware_grid(&HardwareTopology::line(6).unwrap(), 5).unwrap();
        let params = QaoaParams::new(vec![0.7], vec![0.3]).unwrap();
        let rep = lightcone_check(&g, &params, (0, 1), &[(4, 5)]).unwrap();
        assert!(rep.max_deviation() < 1e-12);
        assert_eq!(rep.perturbations[0].distance, 3);
        assert!(matches!(lightcone_check(&g, &params, (0, 1), &[(1, 2)]), Err(Error::Precondition(_))));
    }
}
