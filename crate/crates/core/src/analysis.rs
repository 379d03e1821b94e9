//! Surrogate-quality benchmarks: local sampling strategies around a known
//! optimum, reliability metrics for fitted surrogates, restricted minimum
//! search on the surrogate surface, coordinate-line Fourier spectra, and a
//! trial-median benchmark harness.

use crate::gp::{self, FitOptions, FittedGp, GpError, TrainingSet};
use crate::kernels::{KernelFamily, ProductKernelSpec};
use crate::problems::{
    exact_cost, find_theta_best, maxcut_instance, random_regular_graph, ProblemError,
    ProblemInstance,
};
use crate::qsim::{estimate_cost, NoiseModel, QsimError};
use crate::rng;
use crate::stats;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("invalid spectrum grid: {0}")]
    InvalidGrid(String),
    #[error("invalid benchmark config: {0}")]
    InvalidConfig(String),
    #[error("degenerate cost range in subspace")]
    DegenerateRange,
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

/// Geometry of the local sampling region, independent of where it is
/// centered.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyKind {
    /// Points spread along one full coordinate line, displaced orthogonally
    /// by a distance uniform in [0, max_offset].
    LineNbhd { axis: usize, max_offset: f64 },
    /// Same with two free coordinates spanning a plane.
    PlaneNbhd { axis1: usize, axis2: usize, max_offset: f64 },
    /// Points uniform in a Euclidean ball of the given radius.
    Hyperball { radius: f64 },
}

impl StrategyKind {
    pub fn label(&self) -> &'static str {
        match self {
            StrategyKind::LineNbhd { .. } => "line",
            StrategyKind::PlaneNbhd { .. } => "plane",
            StrategyKind::Hyperball { .. } => "ball",
        }
    }
}

/// A sampling region: kind plus the center point (usually the known
/// optimum).
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingStrategy {
    kind: StrategyKind,
    center: Vec<f64>,
}

impl SamplingStrategy {
    pub fn new(kind: StrategyKind, center: Vec<f64>) -> Result<Self, AnalysisError> {
        let dim = center.len();
        if dim == 0 {
            return Err(AnalysisError::InvalidStrategy("empty center".into()));
        }
        match &kind {
            StrategyKind::LineNbhd { axis, max_offset } => {
                if *axis >= dim {
                    return Err(AnalysisError::InvalidStrategy(format!(
                        "axis {axis} out of range for dimension {dim}"
                    )));
                }
                if !(*max_offset >= 0.0) {
                    return Err(AnalysisError::InvalidStrategy("max_offset must be >= 0".into()));
                }
            }
            StrategyKind::PlaneNbhd { axis1, axis2, max_offset } => {
                if *axis1 >= dim || *axis2 >= dim {
                    return Err(AnalysisError::InvalidStrategy(format!(
                        "axes ({axis1}, {axis2}) out of range for dimension {dim}"
                    )));
                }
                if axis1 == axis2 {
                    return Err(AnalysisError::InvalidStrategy("plane axes must differ".into()));
                }
                if !(*max_offset >= 0.0) {
                    return Err(AnalysisError::InvalidStrategy("max_offset must be >= 0".into()));
                }
            }
            StrategyKind::Hyperball { radius } => {
                if !(*radius > 0.0) {
                    return Err(AnalysisError::InvalidStrategy("radius must be > 0".into()));
                }
            }
        }
        Ok(SamplingStrategy { kind, center })
    }

    pub fn kind(&self) -> &StrategyKind {
        &self.kind
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn label(&self) -> &'static str {
        self.kind.label()
    }

    /// Coordinates free to vary inside the subspace (all of them for a
    /// ball).
    pub fn free_axes(&self) -> Vec<usize> {
        match &self.kind {
            StrategyKind::LineNbhd { axis, .. } => vec![*axis],
            StrategyKind::PlaneNbhd { axis1, axis2, .. } => vec![*axis1, *axis2],
            StrategyKind::Hyperball { .. } => (0..self.dim()).collect(),
        }
    }

    fn contains(&self, point: &[f64]) -> bool {
        match &self.kind {
            StrategyKind::Hyperball { radius } => {
                let d2: f64 =
                    point.iter().zip(&self.center).map(|(p, c)| (p - c) * (p - c)).sum();
                d2.sqrt() <= radius * (1.0 + 1e-12) + 1e-15
            }
            _ => {
                let free = self.free_axes();
                point
                    .iter()
                    .zip(&self.center)
                    .enumerate()
                    .all(|(k, (p, c))| free.contains(&k) || (p - c).abs() < 1e-9)
            }
        }
    }
}

/// Unit vector uniform on the sphere of the subspace orthogonal to the
/// pinned axes; zero vector when that subspace is empty.
fn unit_orthogonal<R: Rng + ?Sized>(dim: usize, pinned: &[usize], rng: &mut R) -> Vec<f64> {
    if pinned.len() >= dim {
        return vec![0.0; dim];
    }
    loop {
        let mut v: Vec<f64> = (0..dim)
            .map(|k| if pinned.contains(&k) { 0.0 } else { StandardNormal.sample(rng) })
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            v.iter_mut().for_each(|x| *x /= norm);
            return v;
        }
    }
}

/// Parameter points only (no measurements), so different noise models can
/// share identical geometry. Free coordinates are uniform over one full
/// period centered on the region's center.
pub fn draw_points<R: Rng + ?Sized>(
    strategy: &SamplingStrategy,
    n: usize,
    periods: &[f64],
    rng: &mut R,
) -> Result<Vec<Vec<f64>>, AnalysisError> {
    let dim = strategy.dim();
    if periods.len() != dim {
        return Err(AnalysisError::InvalidStrategy(format!(
            "{} periods for dimension {dim}",
            periods.len()
        )));
    }
    let center = strategy.center();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let point = match strategy.kind() {
            StrategyKind::LineNbhd { axis, max_offset } => {
                let pos = center[*axis] + (rng.random::<f64>() - 0.5) * periods[*axis];
                let dir = unit_orthogonal(dim, &[*axis], rng);
                let dist = rng.random::<f64>() * max_offset;
                let mut x: Vec<f64> =
                    center.iter().zip(&dir).map(|(c, d)| c + dist * d).collect();
                x[*axis] = pos;
                x
            }
            StrategyKind::PlaneNbhd { axis1, axis2, max_offset } => {
                let p1 = center[*axis1] + (rng.random::<f64>() - 0.5) * periods[*axis1];
                let p2 = center[*axis2] + (rng.random::<f64>() - 0.5) * periods[*axis2];
                let dir = unit_orthogonal(dim, &[*axis1, *axis2], rng);
                let dist = rng.random::<f64>() * max_offset;
                let mut x: Vec<f64> =
                    center.iter().zip(&dir).map(|(c, d)| c + dist * d).collect();
                x[*axis1] = p1;
                x[*axis2] = p2;
                x
            }
            StrategyKind::Hyperball { radius } => {
                let dir = unit_orthogonal(dim, &[], rng);
                let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
                center.iter().zip(&dir).map(|(c, d)| c + r * d).collect()
            }
        };
        out.push(point);
    }
    Ok(out)
}

/// Measure the cost at each point under the given noise model.
pub fn measure_points<R: Rng + ?Sized>(
    instance: &ProblemInstance,
    points: &[Vec<f64>],
    shots: usize,
    noise: NoiseModel,
    rng: &mut R,
) -> Result<TrainingSet, AnalysisError> {
    let mut values = Vec::with_capacity(points.len());
    let mut sigmas = Vec::with_capacity(points.len());
    for p in points {
        let est = estimate_cost(&instance.circuit, &instance.hamiltonian, p, shots, noise, rng)?;
        values.push(est.mean);
        sigmas.push(est.sigma);
    }
    Ok(TrainingSet::new(points, &values, &sigmas)?)
}

/// Draw and measure in one step.
pub fn draw_training_set<R: Rng + ?Sized>(
    strategy: &SamplingStrategy,
    n_t: usize,
    instance: &ProblemInstance,
    shots: usize,
    noise: NoiseModel,
    rng: &mut R,
) -> Result<TrainingSet, AnalysisError> {
    let points = draw_points(strategy, n_t, &instance.periods, rng)?;
    measure_points(instance, &points, shots, noise, rng)
}

/// Discrete Fourier spectrum of the exact cost along one coordinate line.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSpectrum {
    pub axis: usize,
    pub center: Vec<f64>,
    pub grid: usize,
    pub period: f64,
    /// c_0 .. c_{grid/2}; the negative half is the conjugate mirror.
    pub coefficients: Vec<Complex64>,
}

impl LineSpectrum {
    pub fn magnitude(&self, n: usize) -> f64 {
        self.coefficients[n].norm()
    }
}

/// Exact cost sampled on `grid` equispaced points over one period along
/// axis `k`, transformed as c_n = (1/M) Σ_m f_m exp(−2πi·nm/M). `grid` must
/// be a power of two ≥ 16.
pub fn line_spectrum(
    instance: &ProblemInstance,
    center: &[f64],
    axis: usize,
    grid: usize,
) -> Result<LineSpectrum, AnalysisError> {
    if grid < 16 || !grid.is_power_of_two() {
        return Err(AnalysisError::InvalidGrid(format!("{grid} is not a power of two >= 16")));
    }
    if axis >= instance.dim() {
        return Err(AnalysisError::InvalidGrid(format!(
            "axis {axis} out of range for dimension {}",
            instance.dim()
        )));
    }
    let period = instance.periods[axis];
    let offsets: Vec<f64> = (0..grid).map(|m| m as f64 * period / grid as f64).collect();
    let values = crate::problems::exact_line_values(
        &instance.circuit,
        &instance.hamiltonian,
        center,
        axis,
        &offsets,
    )?;
    let mut buf: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    rustfft::FftPlanner::new().plan_fft_forward(grid).process(&mut buf);
    let coefficients = buf[..=grid / 2].iter().map(|c| c / grid as f64).collect();
    Ok(LineSpectrum { axis, center: center.to_vec(), grid, period, coefficients })
}

/// Wrap-aware distance in period units: each coordinate difference is
/// reduced modulo its period to the shorter arc and divided by that period
/// before taking the Euclidean norm.
pub fn wrapped_distance(a: &[f64], b: &[f64], periods: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    assert_eq!(a.len(), periods.len());
    a.iter()
        .zip(b)
        .zip(periods)
        .map(|((x, y), p)| {
            let d = (x - y).rem_euclid(*p);
            let d = d.min(p - d);
            (d / p) * (d / p)
        })
        .sum::<f64>()
        .sqrt()
}

const SCAN_POINTS: usize = 721;
const PATTERN_STEP_TOL: f64 = 1e-5;

/// Deterministic minimization of a batched objective restricted to the
/// strategy subspace: cyclic per-coordinate dense scans (candidates ordered
/// by distance from the incumbent, strict improvement only, so constants
/// stay at the start point), then pattern-search polish down to step 1e−5.
fn subspace_search<F>(
    f: &mut F,
    strategy: &SamplingStrategy,
    periods: &[f64],
    start: &[f64],
) -> Result<(Vec<f64>, f64), AnalysisError>
where
    F: FnMut(&[Vec<f64>]) -> Result<Vec<f64>, AnalysisError>,
{
    let free = strategy.free_axes();
    let mut x = start.to_vec();
    let mut fx = f(&[x.clone()])?[0];
    for _sweep in 0..50 {
        let mut improved = false;
        for &k in &free {
            let delta = periods[k] / SCAN_POINTS as f64;
            let mut cands = Vec::with_capacity(SCAN_POINTS);
            for j in 1..=SCAN_POINTS / 2 {
                for sign in [-1.0, 1.0] {
                    let mut y = x.clone();
                    y[k] += sign * j as f64 * delta;
                    if strategy.contains(&y) {
                        cands.push(y);
                    }
                }
            }
            if cands.is_empty() {
                continue;
            }
            let vals = f(&cands)?;
            let mut best = fx;
            let mut best_i = None;
            for (i, v) in vals.iter().enumerate() {
                if *v < best {
                    best = *v;
                    best_i = Some(i);
                }
            }
            if let Some(i) = best_i {
                x = cands[i].clone();
                fx = best;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    let mut h =
        free.iter().map(|&k| periods[k] / SCAN_POINTS as f64).fold(f64::INFINITY, f64::min);
    while h >= PATTERN_STEP_TOL {
        let mut cands = Vec::with_capacity(2 * free.len());
        for &k in &free {
            for sign in [-1.0, 1.0] {
                let mut y = x.clone();
                y[k] += sign * h;
                if strategy.contains(&y) {
                    cands.push(y);
                }
            }
        }
        let vals = if cands.is_empty() { Vec::new() } else { f(&cands)? };
        let mut best = fx;
        let mut best_i = None;
        for (i, v) in vals.iter().enumerate() {
            if *v < best {
                best = *v;
                best_i = Some(i);
            }
        }
        match best_i {
            Some(i) => {
                x = cands[i].clone();
                fx = best;
            }
            None => h *= 0.5,
        }
    }
    Ok((x, fx))
}

/// Minimizer of the surrogate's posterior mean restricted to the strategy
/// subspace, starting from `start` (which must lie in the subspace).
pub fn gpm_minimum_search(
    gp: &FittedGp,
    strategy: &SamplingStrategy,
    periods: &[f64],
    start: &[f64],
) -> Result<Vec<f64>, AnalysisError> {
    if !strategy.contains(start) {
        return Err(AnalysisError::InvalidStrategy("start point is outside the subspace".into()));
    }
    let mut f =
        |pts: &[Vec<f64>]| -> Result<Vec<f64>, AnalysisError> { Ok(gp.predict_mean(pts)?) };
    let (x, _) = subspace_search(&mut f, strategy, periods, start)?;
    Ok(x)
}

/// Extremum of the exact (noiseless) cost restricted to the strategy
/// subspace, with the same search machinery as [`gpm_minimum_search`].
pub fn exact_extremum_in_subspace(
    instance: &ProblemInstance,
    strategy: &SamplingStrategy,
    start: &[f64],
    maximize: bool,
) -> Result<(Vec<f64>, f64), AnalysisError> {
    if !strategy.contains(start) {
        return Err(AnalysisError::InvalidStrategy("start point is outside the subspace".into()));
    }
    let sign = if maximize { -1.0 } else { 1.0 };
    let mut f = |pts: &[Vec<f64>]| -> Result<Vec<f64>, AnalysisError> {
        pts.iter().map(|p| Ok(sign * exact_cost(instance, p)?)).collect()
    };
    let (x, fx) = subspace_search(&mut f, strategy, &instance.periods, start)?;
    Ok((x, sign * fx))
}

/// Distance between predicted and true minimum locations, in period units.
pub fn metric_d_min(theta_true: &[f64], theta_gpm: &[f64], periods: &[f64]) -> f64 {
    wrapped_distance(theta_true, theta_gpm, periods)
}

/// Predictive density of the true minimum value at the true minimum
/// location.
pub fn metric_l_min(gp: &FittedGp, theta_true: &[f64], y_min: f64) -> Result<f64, AnalysisError> {
    let post = gp.posterior(&[theta_true.to_vec()])?;
    Ok(gp::point_likelihood(&post, y_min)?)
}

/// Prediction error at the minimum, normalized by the exact cost range over
/// the subspace.
pub fn metric_delta_min(y_gpm: f64, y_min: f64, y_max: f64) -> Result<f64, AnalysisError> {
    if !(y_max > y_min) {
        return Err(AnalysisError::DegenerateRange);
    }
    Ok((y_gpm - y_min).abs() / (y_max - y_min))
}

/// Mean predictive density over a noiseless test set.
pub fn metric_l_test(
    gp: &FittedGp,
    points: &[Vec<f64>],
    values: &[f64],
) -> Result<f64, AnalysisError> {
    assert_eq!(points.len(), values.len());
    assert!(!points.is_empty(), "empty test set");
    let mut acc = 0.0;
    for (p, v) in points.iter().zip(values) {
        let post = gp.posterior(std::slice::from_ref(p))?;
        acc += gp::point_likelihood(&post, *v)?;
    }
    Ok(acc / points.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    DMin,
    LMin,
    DeltaMin,
    LTest,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] =
        [MetricKind::DMin, MetricKind::LMin, MetricKind::DeltaMin, MetricKind::LTest];

    pub fn label(self) -> &'static str {
        match self {
            MetricKind::DMin => "d_min",
            MetricKind::LMin => "L_min",
            MetricKind::DeltaMin => "delta_min",
            MetricKind::LTest => "L_test",
        }
    }
}

/// One benchmark measurement; `failed` rows carry NaN and are excluded from
/// medians.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRecord {
    pub kernel: String,
    pub strategy: String,
    pub n_t: usize,
    pub metric: MetricKind,
    pub value: f64,
    pub seed: u64,
    pub instance_id: String,
    pub failed: bool,
}

impl MetricRecord {
    pub const CSV_HEADER: &'static str = "kernel,strategy,n_t,metric,value,seed,instance_id,failed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.kernel,
            self.strategy,
            self.n_t,
            self.metric.label(),
            self.value,
            self.seed,
            self.instance_id,
            self.failed
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MedianRow {
    pub kernel: String,
    pub strategy: String,
    pub n_t: usize,
    pub metric: MetricKind,
    pub median: f64,
    pub trials: usize,
    pub failures: usize,
}

impl MedianRow {
    pub const CSV_HEADER: &'static str = "kernel,strategy,n_t,metric,median,trials,failures";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.kernel,
            self.strategy,
            self.n_t,
            self.metric.label(),
            self.median,
            self.trials,
            self.failures
        )
    }
}

/// Full benchmark grid. Each (N_T, trial) cell gets a fresh random regular
/// graph and training set; the training set is shared by every kernel in
/// that cell, and the parameter points are drawn from RNG streams that do
/// not depend on the noise model, so runs differing only in `noise` measure
/// the same geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkConfig {
    pub kernels: Vec<KernelFamily>,
    pub strategies: Vec<StrategyKind>,
    pub n_t_grid: Vec<usize>,
    pub trials: usize,
    pub shots: usize,
    pub noise: NoiseModel,
    pub seed: u64,
    pub vertices: usize,
    pub degree: usize,
    pub layers: usize,
    /// Test-set size for L_test.
    pub test_points: usize,
    /// Restarts for the per-instance exact-optimum search.
    pub theta_best_restarts: usize,
    pub fit: FitOptions,
    /// Metrics to record (subset of [`MetricKind::ALL`]).
    pub metrics: Vec<MetricKind>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            kernels: vec![KernelFamily::Se, KernelFamily::TrigS],
            strategies: vec![StrategyKind::LineNbhd {
                axis: 4,
                max_offset: 0.05 * std::f64::consts::PI,
            }],
            n_t_grid: vec![10, 20, 40],
            trials: 5,
            shots: 20,
            noise: NoiseModel::Realistic,
            seed: 0,
            vertices: 8,
            degree: 3,
            layers: 4,
            test_points: 200,
            theta_best_restarts: 16,
            fit: FitOptions::default(),
            metrics: MetricKind::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkResult {
    pub records: Vec<MetricRecord>,
    pub medians: Vec<MedianRow>,
}

struct TrialOutput {
    records: Vec<MetricRecord>,
}

fn run_trial(config: &BenchmarkConfig, nt_index: usize, trial: usize) -> Result<TrialOutput, AnalysisError> {
    let n_t = config.n_t_grid[nt_index];
    let task = (nt_index * config.trials + trial) as u64;
    let trial_seed = rng::subseed(config.seed, "analysis.graph", task);
    let instance_id = format!(
        "maxcut-v{}-d{}-p{}-t{}",
        config.vertices, config.degree, config.layers, task
    );

    let mut graph_rng = rng::stream(config.seed, "analysis.graph", task);
    let graph = random_regular_graph(config.vertices, config.degree, &mut graph_rng)?;
    let mut instance = maxcut_instance(&graph, config.layers)?;
    let (theta_best, y_min) = find_theta_best(
        &instance,
        config.theta_best_restarts,
        rng::subseed(config.seed, "analysis.theta-best", task),
    )?;
    instance.theta_best = Some(theta_best.clone());

    let mut records = Vec::new();
    for (si, kind) in config.strategies.iter().enumerate() {
        let stream_id = task * 64 + si as u64;
        let strategy = SamplingStrategy::new(kind.clone(), theta_best.clone())?;
        let points = draw_points(
            &strategy,
            n_t,
            &instance.periods,
            &mut rng::stream(config.seed, "analysis.points", stream_id),
        )?;
        let train = measure_points(
            &instance,
            &points,
            config.shots,
            config.noise,
            &mut rng::stream(config.seed, "analysis.measure", stream_id),
        )?;
        let (test_points, test_values) = if config.metrics.contains(&MetricKind::LTest) {
            let pts = draw_points(
                &strategy,
                config.test_points,
                &instance.periods,
                &mut rng::stream(config.seed, "analysis.test", stream_id),
            )?;
            let vals: Result<Vec<f64>, ProblemError> =
                pts.iter().map(|p| exact_cost(&instance, p)).collect();
            (pts, vals?)
        } else {
            (Vec::new(), Vec::new())
        };
        let y_max = if config.metrics.contains(&MetricKind::DeltaMin) {
            Some(exact_extremum_in_subspace(&instance, &strategy, &theta_best, true)?.1)
        } else {
            None
        };

        for &family in &config.kernels {
            let mut push = |metric: MetricKind, value: Result<f64, AnalysisError>| {
                let (value, failed) = match value {
                    Ok(v) if v.is_finite() => (v, false),
                    _ => (f64::NAN, true),
                };
                records.push(MetricRecord {
                    kernel: family.label().to_string(),
                    strategy: strategy.label().to_string(),
                    n_t,
                    metric,
                    value,
                    seed: trial_seed,
                    instance_id: instance_id.clone(),
                    failed,
                });
            };
            let template =
                ProductKernelSpec::uniform(1.0, family, &instance.periods, &instance.n_f)
                    .map_err(GpError::from);
            let gp = template.and_then(|t| {
                let report = gp::optimize_hyperparameters(&t, &train, &config.fit)?;
                FittedGp::new(report.spec, train.clone())
            });
            match gp {
                Err(_) => {
                    for &m in &config.metrics {
                        push(m, Err(AnalysisError::DegenerateRange));
                    }
                }
                Ok(gp) => {
                    for &m in &config.metrics {
                        let value = match m {
                            MetricKind::DMin => {
                                gpm_minimum_search(&gp, &strategy, &instance.periods, &theta_best)
                                    .map(|t| metric_d_min(&theta_best, &t, &instance.periods))
                            }
                            MetricKind::LMin => metric_l_min(&gp, &theta_best, y_min),
                            MetricKind::DeltaMin => gp
                                .predict_mean(std::slice::from_ref(&theta_best))
                                .map_err(AnalysisError::from)
                                .and_then(|y| {
                                    metric_delta_min(y[0], y_min, y_max.expect("computed above"))
                                }),
                            MetricKind::LTest => metric_l_test(&gp, &test_points, &test_values),
                        };
                        push(m, value);
                    }
                }
            }
        }
    }
    Ok(TrialOutput { records })
}

/// Run the whole grid. Trials execute as independent tasks; the output is
/// deterministic for a given config (records sorted, medians over non-failed
/// values).
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkResult, AnalysisError> {
    if config.trials == 0 || config.n_t_grid.is_empty() || config.kernels.is_empty() {
        return Err(AnalysisError::InvalidConfig(
            "need at least one trial, one N_T, and one kernel".into(),
        ));
    }
    if config.strategies.len() > 64 {
        return Err(AnalysisError::InvalidConfig("at most 64 strategies".into()));
    }
    if config.metrics.is_empty() {
        return Err(AnalysisError::InvalidConfig("no metrics requested".into()));
    }
    let cells: Vec<(usize, usize)> = (0..config.n_t_grid.len())
        .flat_map(|ti| (0..config.trials).map(move |tr| (ti, tr)))
        .collect();
    let outputs: Result<Vec<TrialOutput>, AnalysisError> =
        cells.par_iter().map(|&(ti, tr)| run_trial(config, ti, tr)).collect();
    let mut records: Vec<MetricRecord> =
        outputs?.into_iter().flat_map(|o| o.records).collect();
    records.sort_by(|a, b| {
        (&a.kernel, &a.strategy, a.n_t, a.metric, a.seed)
            .cmp(&(&b.kernel, &b.strategy, b.n_t, b.metric, b.seed))
    });

    let mut groups: BTreeMap<(String, String, usize, MetricKind), (Vec<f64>, usize)> =
        BTreeMap::new();
    for r in &records {
        let entry = groups
            .entry((r.kernel.clone(), r.strategy.clone(), r.n_t, r.metric))
            .or_default();
        if r.failed {
            entry.1 += 1;
        } else {
            entry.0.push(r.value);
        }
    }
    let medians = groups
        .into_iter()
        .map(|((kernel, strategy, n_t, metric), (values, failures))| MedianRow {
            kernel,
            strategy,
            n_t,
            metric,
            median: if values.is_empty() { f64::NAN } else { stats::median(&values) },
            trials: values.len() + failures,
            failures,
        })
        .collect();
    Ok(BenchmarkResult { records, medians })
}
