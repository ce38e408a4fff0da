//! Model gradient descent and `(γ, β)` landscape scans.
//!
//! Objectives are minimized. Each call receives its own random stream, keyed
//! by a seed drawn once from the caller's generator and the evaluation index,
//! so noisy objectives give the same log regardless of thread scheduling.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::problems::{brute_force_min, ProblemGraph};
use crate::rng::{self, WorkbenchRng};
use crate::routing::QaoaParams;
use crate::simulator::QaoaSimulator;

const EVAL_STREAM_TAG: u64 = 0x4d47_44;
const RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgdConfig {
    pub learning_rate: f64,
    pub sample_radius: f64,
    pub sample_count: usize,
    pub rate_decay_exponent: f64,
    pub stability_constant: f64,
    pub radius_decay_exponent: f64,
    pub tolerance: f64,
    pub max_evaluations: usize,
}

impl Default for MgdConfig {
    fn default() -> Self {
        MgdConfig {
            learning_rate: 0.3,
            sample_radius: 0.25,
            sample_count: 6,
            rate_decay_exponent: 0.6,
            stability_constant: 3.0,
            radius_decay_exponent: 0.5,
            tolerance: 1e-4,
            max_evaluations: 1000,
        }
    }
}

impl MgdConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.learning_rate,
            self.sample_radius,
            self.rate_decay_exponent,
            self.stability_constant,
            self.radius_decay_exponent,
            self.tolerance,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Invalid("MGD hyperparameters must be finite".into()));
        }
        if self.sample_radius <= 0.0 {
            return Err(Error::Invalid(format!("sample radius must be > 0, got {}", self.sample_radius)));
        }
        if self.tolerance < 0.0 {
            return Err(Error::Invalid(format!("tolerance must be >= 0, got {}", self.tolerance)));
        }
        if self.max_evaluations == 0 {
            return Err(Error::Invalid("max evaluations must be >= 1".into()));
        }
        if self.sample_count == 0 {
            return Err(Error::Invalid("sample count must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub x: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MgdResult {
    /// Final iterate.
    pub x: Vec<f64>,
    pub log: Vec<Evaluation>,
    pub iterations: usize,
    /// True when the step-size tolerance stopped the loop before the budget.
    pub converged: bool,
}

impl MgdResult {
    /// Lowest logged evaluation.
    pub fn best_logged(&self) -> Option<&Evaluation> {
        self.log.iter().min_by(|a, b| a.value.total_cmp(&b.value))
    }

    /// `eval_index,x0..,value` with caller-supplied column names.
    pub fn log_csv(&self, names: &[String]) -> String {
        let mut out = String::from("eval_index");
        for n in names {
            out.push(',');
            out.push_str(n);
        }
        out.push_str(",value\n");
        for (i, e) in self.log.iter().enumerate() {
            let _ = write!(out, "{i}");
            for v in &e.x {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{}", e.value);
        }
        out
    }
}

/// Column names `gamma1..gammap,beta1..betap` for a QAOA parameter vector.
pub fn qaoa_log_columns(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("gamma{i}")).chain((1..=p).map(|i| format!("beta{i}"))).collect()
}

/// Fitted model `y ≈ c + bᵀ(x - center) + (x - center)ᵀ Q (x - center)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    pub center: Vec<f64>,
    pub constant: f64,
    pub linear: Vec<f64>,
    pub quadratic: DMatrix<f64>,
    /// Quadratic terms were dropped because the design was rank deficient.
    pub linear_only: bool,
}

impl QuadraticModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let d = DVector::from_iterator(x.len(), x.iter().zip(&self.center).map(|(a, c)| a - c));
        self.constant + DVector::from_column_slice(&self.linear).dot(&d) + (d.transpose() * &self.quadratic * &d)[(0, 0)]
    }

    pub fn gradient_at(&self, x: &[f64]) -> Vec<f64> {
        let d = DVector::from_iterator(x.len(), x.iter().zip(&self.center).map(|(a, c)| a - c));
        let g = DVector::from_column_slice(&self.linear) + 2.0 * &self.quadratic * d;
        g.iter().copied().collect()
    }

    /// Gradient at the center, which is `b`.
    pub fn gradient(&self) -> &[f64] {
        &self.linear
    }
}

fn features(d: &[f64], quadratic: bool) -> Vec<f64> {
    let mut f = Vec::with_capacity(1 + d.len() + d.len() * (d.len() + 1) / 2);
    f.push(1.0);
    f.extend_from_slice(d);
    if quadratic {
        for i in 0..d.len() {
            for j in i..d.len() {
                f.push(d[i] * d[j]);
            }
        }
    }
    f
}

/// Least squares through the SVD of the column-equilibrated design. Returns
/// the solution and the numerical rank.
fn lstsq(mut a: DMatrix<f64>, y: DVector<f64>) -> (DVector<f64>, usize) {
    let scale: Vec<f64> = a.column_iter().map(|c| c.norm()).map(|s| if s > 0.0 { s } else { 1.0 }).collect();
    for (mut c, s) in a.column_iter_mut().zip(&scale) {
        c /= *s;
    }
    let ncols = a.ncols();
    let svd = a.svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = smax * RANK_RTOL;
    let rank = svd.singular_values.iter().filter(|&&s| s > cut).count();
    let mut sol = if smax == 0.0 {
        DVector::zeros(ncols)
    } else {
        svd.solve(&y, cut).unwrap_or_else(|_| DVector::zeros(ncols))
    };
    for (v, s) in sol.iter_mut().zip(&scale) {
        *v /= s;
    }
    (sol, rank)
}

fn fit(points: &[Evaluation], center: &[f64], quadratic: bool) -> (QuadraticModel, usize, usize) {
    let dim = center.len();
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|e| {
            let d: Vec<f64> = e.x.iter().zip(center).map(|(a, c)| a - c).collect();
            features(&d, quadratic)
        })
        .collect();
    let ncols = rows.first().map_or(1, |r| r.len());
    let a = DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]);
    let y = DVector::from_iterator(points.len(), points.iter().map(|e| e.value));
    let (sol, rank) = lstsq(a, y);
    let mut q = DMatrix::zeros(dim, dim);
    if quadratic {
        let mut k = 1 + dim;
        for i in 0..dim {
            for j in i..dim {
                if i == j {
                    q[(i, i)] = sol[k];
                } else {
                    q[(i, j)] = sol[k] / 2.0;
                    q[(j, i)] = sol[k] / 2.0;
                }
                k += 1;
            }
        }
    }
    let model = QuadraticModel {
        center: center.to_vec(),
        constant: sol[0],
        linear: sol.iter().skip(1).take(dim).copied().collect(),
        quadratic: q,
        linear_only: !quadratic,
    };
    (model, rank, ncols)
}

/// Full quadratic fit about the centroid of the sample points.
pub fn fit_quadratic(points: &[Evaluation]) -> Result<QuadraticModel> {
    let first = points.first().ok_or_else(|| Error::Fit("need at least one point".into()))?;
    let dim = first.x.len();
    let mut c = vec![0.0; dim];
    for e in points {
        if e.x.len() != dim {
            return Err(Error::Dimension { expected: dim, got: e.x.len() });
        }
        for (ci, xi) in c.iter_mut().zip(&e.x) {
            *ci += xi;
        }
    }
    c.iter_mut().for_each(|v| *v /= points.len() as f64);
    fit_quadratic_at(points, &c)
}

/// Full quadratic fit in coordinates centered on `center`.
pub fn fit_quadratic_at(points: &[Evaluation], center: &[f64]) -> Result<QuadraticModel> {
    if points.is_empty() {
        return Err(Error::Fit("need at least one point".into()));
    }
    if let Some(e) = points.iter().find(|e| e.x.len() != center.len()) {
        return Err(Error::Dimension { expected: center.len(), got: e.x.len() });
    }
    Ok(fit(points, center, true).0)
}

/// Quadratic fit, or a linear one when the quadratic design is rank deficient.
pub fn fit_surrogate(points: &[Evaluation], center: &[f64]) -> Result<QuadraticModel> {
    if points.is_empty() {
        return Err(Error::Fit("need at least one point".into()));
    }
    let (model, rank, ncols) = fit(points, center, true);
    if rank == ncols {
        return Ok(model);
    }
    Ok(fit(points, center, false).0)
}

/// Model gradient descent on `objective`, which is minimized.
pub fn mgd<F, R>(objective: F, x0: &[f64], config: &MgdConfig, rng: &mut R) -> Result<MgdResult>
where
    F: Fn(&[f64], &mut WorkbenchRng) -> f64 + Sync,
    R: RngCore + ?Sized,
{
    config.validate()?;
    if x0.is_empty() {
        return Err(Error::Invalid("empty starting point".into()));
    }
    let dim = x0.len();
    let k = config.sample_count;
    let eval_seed = rng.next_u64();
    let mut x = x0.to_vec();
    let mut log: Vec<Evaluation> = Vec::new();
    let mut m = 0usize;
    // Each iteration spends the center evaluation plus k samples.
    while log.len() + k + 1 <= config.max_evaluations {
        let radius = config.sample_radius / ((m + 1) as f64).powf(config.radius_decay_exponent);
        let mut batch = vec![x.clone()];
        for _ in 0..k {
            batch.push(x.iter().map(|&c| c + radius * (2.0 * rng::unit_f64(rng) - 1.0)).collect());
        }
        let start = log.len() as u64;
        let values = par::map_collect(batch.iter().enumerate().collect(), |(i, p)| {
            let mut stream = rng::stream(EVAL_STREAM_TAG, start + i as u64, eval_seed);
            objective(p, &mut stream)
        });
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("objective returned {v}")));
        }
        log.extend(batch.into_iter().zip(values).map(|(x, value)| Evaluation { x, value }));

        let near: Vec<Evaluation> = log
            .iter()
            .filter(|e| e.x.iter().zip(&x).all(|(a, b)| (a - b).abs() < radius))
            .cloned()
            .collect();
        let g = fit_surrogate(&near, &x)?.linear;
        let rate = config.learning_rate / ((m + 1) as f64 + config.stability_constant).powf(config.rate_decay_exponent);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rate * gnorm < config.tolerance {
            return Ok(MgdResult { x, log, iterations: m, converged: true });
        }
        for i in 0..dim {
            x[i] -= rate * g[i];
        }
        m += 1;
    }
    Ok(MgdResult { x, log, iterations: m, converged: false })
}

/// Values on an inclusive `(γ, β)` lattice; `values[i][j]` belongs to
/// `(gamma_axis[i], beta_axis[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeGrid {
    pub gamma_axis: Vec<f64>,
    pub beta_axis: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl LandscapeGrid {
    /// `(i, j, value)` of the largest cell, first in row-major order on ties.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        best
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,beta,ratio\n");
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", self.gamma_axis[i], self.beta_axis[j], v + 0.0);
            }
        }
        out
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo + step * i as f64 }).collect()
}

pub fn grid_scan<F>(objective: F, gamma_range: (f64, f64), beta_range: (f64, f64), resolution: usize) -> Result<LandscapeGrid>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    if resolution < 2 {
        return Err(Error::Invalid(format!("resolution must be >= 2, got {resolution}")));
    }
    if !(gamma_range.0 < gamma_range.1) || !(beta_range.0 < beta_range.1) {
        return Err(Error::Invalid("scan ranges must be increasing".into()));
    }
    let gamma_axis = linspace(gamma_range.0, gamma_range.1, resolution);
    let beta_axis = linspace(beta_range.0, beta_range.1, resolution);
    let cells: Vec<(usize, usize)> = (0..resolution).flat_map(|i| (0..resolution).map(move |j| (i, j))).collect();
    let flat = par::map_collect(cells, |(i, j)| objective(gamma_axis[i], beta_axis[j]));
    let values = flat.chunks(resolution).map(|r| r.to_vec()).collect();
    Ok(LandscapeGrid { gamma_axis, beta_axis, values })
}

/// Default landscape window.
pub const GAMMA_RANGE: (f64, f64) = (0.0, PI / 2.0);
pub const BETA_RANGE: (f64, f64) = (-PI / 4.0, PI / 4.0);
pub const LANDSCAPE_RESOLUTION: usize = 50;
pub const MULTISTARTS: usize = 10;

/// Exact `⟨C⟩ / C_min` evaluator.
#[derive(Debug, Clone)]
pub struct RatioObjective {
    sim: QaoaSimulator,
    c_min: f64,
}

impl RatioObjective {
    pub fn new(graph: &ProblemGraph) -> Result<Self> {
        let c_min = brute_force_min(graph)?.c_min as f64;
        if c_min >= 0.0 {
            return Err(Error::Domain(format!("ratio undefined for C_min = {c_min}")));
        }
        Ok(RatioObjective { sim: QaoaSimulator::new(graph)?, c_min })
    }

    pub fn c_min(&self) -> f64 {
        self.c_min
    }

    pub fn simulator(&self) -> &QaoaSimulator {
        &self.sim
    }

    pub fn ratio(&self, params: &QaoaParams) -> Result<f64> {
        Ok(self.sim.expectation(params)? / self.c_min)
    }

    /// Ratio of a flat `[γ.., β..]` vector; non-finite for malformed input.
    pub fn ratio_vec(&self, x: &[f64]) -> f64 {
        QaoaParams::from_slice(x).and_then(|p| self.ratio(&p)).unwrap_or(f64::NAN)
    }

    pub fn landscape(&self, gamma_range: (f64, f64), beta_range: (f64, f64), resolution: usize) -> Result<LandscapeGrid> {
        grid_scan(|g, b| self.ratio_vec(&[g, b]), gamma_range, beta_range, resolution)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalAngles {
    pub params: QaoaParams,
    pub ratio: f64,
    /// Some refinement ran out of budget before meeting its tolerance.
    pub budget_exhausted: bool,
}

/// Noiseless optimum of `⟨C⟩ / C_min` at depth `p`. See [`optimal_angles_upto`].
pub fn optimal_angles(graph: &ProblemGraph, p: usize, budget: usize, seed: u64) -> Result<OptimalAngles> {
    Ok(optimal_angles_upto(graph, p, budget, seed)?.pop().expect("p >= 1"))
}

/// Noiseless optima for depths `1..=p_max`. Depth 1 scans the default window
/// and refines the best cell; each deeper level multistarts from the previous
/// solution padded with zeros. `budget` caps evaluations per MGD run.
pub fn optimal_angles_upto(graph: &ProblemGraph, p_max: usize, budget: usize, seed: u64) -> Result<Vec<OptimalAngles>> {
    if p_max == 0 {
        return Err(Error::Invalid("p must be >= 1".into()));
    }
    let obj = RatioObjective::new(graph)?;
    let config = MgdConfig { max_evaluations: budget, ..MgdConfig::default() };
    let neg = |x: &[f64], _: &mut WorkbenchRng| -obj.ratio_vec(x);
    let mut out: Vec<OptimalAngles> = Vec::with_capacity(p_max);

    for p in 1..=p_max {
        let mut rng = rng::stream(EVAL_STREAM_TAG, p as u64, seed);
        let (mut best_x, mut best, mut exhausted) = match out.last() {
            None => {
                let grid = obj.landscape(GAMMA_RANGE, BETA_RANGE, LANDSCAPE_RESOLUTION)?;
                let (i, j, v) = grid.argmax();
                (vec![grid.gamma_axis[i], grid.beta_axis[j]], v, false)
            }
            Some(prev) => {
                let mut g = prev.params.gamma.clone();
                let mut b = prev.params.beta.clone();
                g.push(0.0);
                b.push(0.0);
                let x: Vec<f64> = g.into_iter().chain(b).collect();
                let v = obj.ratio_vec(&x);
                (x, v, prev.budget_exhausted)
            }
        };
        let mut starts = vec![best_x.clone()];
        if p > 1 {
            let mut perturb = rng::stream(EVAL_STREAM_TAG ^ 1, p as u64, seed);
            for _ in 1..MULTISTARTS {
                starts.push(best_x.iter().map(|&c| c + 0.2 * (2.0 * rng::unit_f64(&mut perturb) - 1.0)).collect());
            }
        }
        for start in starts {
            let res = mgd(neg, &start, &config, &mut rng)?;
            exhausted |= !res.converged;
            let candidates = std::iter::once((res.x.clone(), obj.ratio_vec(&res.x)))
                .chain(res.log.iter().map(|e| (e.x.clone(), -e.value)));
            for (x, v) in candidates {
                if v > best {
                    best = v;
                    best_x = x;
                }
            }
        }
        if exhausted {
            log::warn!("MGD budget exhausted at p = {p}; returning best point found");
        }
        out.push(OptimalAngles { params: QaoaParams::from_slice(&best_x)?, ratio: best, budget_exhausted: exhausted });
    }
    Ok(out)
}
