//! Sequential line-search optimizers: bare RotoSolve generalized to
//! multi-frequency lines, and RotoGP, which filters the line update through
//! a GP surrogate fitted to an archive of every measurement taken so far.
//!
//! Measurements are the only information the optimizers see; the exact cost
//! recorded in trajectories is a simulation oracle for evaluation and is
//! excluded from shot accounting.

use crate::gp::{self, FitOptions, FittedGp, GpError, TrainingSet};
use crate::kernels::{KernelFamily, ProductKernelSpec};
use crate::linalg;
use crate::problems::{exact_cost, ProblemError, ProblemInstance};
use crate::qsim::{estimate_cost, NoiseModel, QsimError};
use crate::rng;
use crate::trigpoly;
use faer::Mat;
use rand::Rng;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RotoError {
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
    #[error("duplicate sample angles make the line system singular")]
    DuplicateAngles,
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

#[derive(Clone, Debug, PartialEq)]
pub enum OptimizerMode {
    RotoSolve,
    RotoGp { kernel: KernelFamily },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub mode: OptimizerMode,
    /// Per-coordinate line-model frequency counts ñ_f.
    pub n_f: Vec<usize>,
    pub periods: Vec<f64>,
    /// Shots per measurement group per sample point.
    pub shots: usize,
    pub max_sweeps: usize,
    /// Archive samples fed to each GP refit (nearest to the current line).
    pub subset_cap: usize,
    pub seed: u64,
    pub noise: NoiseModel,
    /// Stop before any step that would push s_tot past this budget.
    pub max_shots: Option<u64>,
    /// Per-step refit options; the default relies on warm starts.
    pub fit: FitOptions,
}

impl OptimizerConfig {
    pub fn new(mode: OptimizerMode, n_f: Vec<usize>, periods: Vec<f64>) -> Self {
        OptimizerConfig {
            mode,
            n_f,
            periods,
            shots: 100,
            max_sweeps: 30,
            subset_cap: 300,
            seed: 0,
            noise: NoiseModel::Realistic,
            max_shots: None,
            fit: FitOptions { restarts: 1, max_iters: 20, seed: 0, grad_tol: 1e-3 },
        }
    }

    fn validate(&self, dim: usize) -> Result<(), RotoError> {
        if self.n_f.len() != dim || self.periods.len() != dim {
            return Err(RotoError::InvalidConfig(format!(
                "config is {}-dimensional, instance has {dim} parameters",
                self.n_f.len()
            )));
        }
        if self.n_f.iter().any(|&n| n < 1) {
            return Err(RotoError::InvalidConfig("every ñ_f must be >= 1".into()));
        }
        if self.periods.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(RotoError::InvalidConfig("periods must be positive".into()));
        }
        if self.shots < 1 {
            return Err(RotoError::InvalidConfig("shots must be >= 1".into()));
        }
        let need = 2 * self.n_f.iter().max().copied().unwrap_or(1) + 1;
        if self.subset_cap < need {
            return Err(RotoError::InvalidConfig(format!(
                "subset cap {} cannot hold the {need} fresh line samples",
                self.subset_cap
            )));
        }
        Ok(())
    }
}

/// One trajectory row; the entry with `axis: None` is the starting point.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryEntry {
    pub step: usize,
    pub axis: Option<usize>,
    pub s_tot: u64,
    pub theta: Vec<f64>,
    /// Oracle evaluation, not visible to the optimizer.
    pub exact_cost: f64,
    /// Line-model (or posterior-mean) value predicted at the accepted point;
    /// NaN for the starting entry.
    pub predicted: f64,
    /// True when a GP failure forced a RotoSolve fallback for this step.
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub entries: Vec<TrajectoryEntry>,
    pub theta_final: Vec<f64>,
}

impl Trajectory {
    pub fn csv_header(dim: usize) -> String {
        let mut s = String::from("step,axis,s_tot,exact_cost,predicted,fallback");
        for k in 0..dim {
            s.push_str(&format!(",theta_{k}"));
        }
        s
    }

    pub fn csv_row(entry: &TrajectoryEntry) -> String {
        let axis = entry.axis.map_or(String::new(), |a| a.to_string());
        let mut s = format!(
            "{},{},{},{},{},{}",
            entry.step, axis, entry.s_tot, entry.exact_cost, entry.predicted, entry.fallback
        );
        for t in &entry.theta {
            s.push_str(&format!(",{t}"));
        }
        s
    }
}

/// Mutable optimizer state: current point, shot ledger, and the measurement
/// archive (accumulated, never replaced, including repeated anchors).
#[derive(Clone, Debug)]
pub struct OptimizerState {
    theta: Vec<f64>,
    s_tot: u64,
    archive_points: Vec<Vec<f64>>,
    archive_values: Vec<f64>,
    archive_sigmas: Vec<f64>,
    warm: Option<ProductKernelSpec>,
}

impl OptimizerState {
    pub fn new(theta0: Vec<f64>) -> Self {
        OptimizerState {
            theta: theta0,
            s_tot: 0,
            archive_points: Vec::new(),
            archive_values: Vec::new(),
            archive_sigmas: Vec::new(),
            warm: None,
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn s_tot(&self) -> u64 {
        self.s_tot
    }

    pub fn archive_len(&self) -> usize {
        self.archive_points.len()
    }
}

/// The 2ñ_f+1 sample points of a line scan: equispaced over one period
/// along `axis`, anchored so the current point itself is sampled.
pub fn line_samples(theta: &[f64], axis: usize, n_f: usize, period: f64) -> Vec<Vec<f64>> {
    trigpoly::sample_offsets(period, n_f)
        .into_iter()
        .map(|off| {
            let mut p = theta.to_vec();
            p[axis] += off;
            p
        })
        .collect()
}

/// Trigonometric line model a_0 + Σ_k a_k cos(k·u) + b_k sin(k·u) with
/// u = θ·2π/period.
#[derive(Clone, Debug, PartialEq)]
pub struct LineModel {
    pub period: f64,
    pub a0: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl LineModel {
    pub fn eval(&self, theta: f64) -> f64 {
        let u = theta * TAU / self.period;
        let mut f = self.a0;
        for k in 0..self.a.len() {
            let ku = (k + 1) as f64 * u;
            f += self.a[k] * ku.cos() + self.b[k] * ku.sin();
        }
        f
    }

    /// (f', f'') with respect to u.
    fn derivs_u(&self, u: f64) -> (f64, f64) {
        let (mut d1, mut d2) = (0.0, 0.0);
        for k in 0..self.a.len() {
            let kf = (k + 1) as f64;
            let (s, c) = (kf * u).sin_cos();
            d1 += kf * (-self.a[k] * s + self.b[k] * c);
            d2 += kf * kf * (-self.a[k] * c - self.b[k] * s);
        }
        (d1, d2)
    }
}

/// Fit a line model to (angle, mean, sigma) samples: exact interpolation
/// when the count matches 2ñ_f+1, inverse-sigma weighted least squares when
/// more samples are supplied.
pub fn trig_line_fit(
    samples: &[(f64, f64, f64)],
    n_f: usize,
    period: f64,
) -> Result<LineModel, RotoError> {
    let cols = 2 * n_f + 1;
    if samples.len() < cols {
        return Err(RotoError::InvalidConfig(format!(
            "{} samples cannot determine {cols} coefficients",
            samples.len()
        )));
    }
    // interpolation needs distinct angles modulo the period
    if samples.len() == cols {
        for i in 0..samples.len() {
            for j in 0..i {
                let d = (samples[i].0 - samples[j].0).rem_euclid(period);
                if d.min(period - d) < 1e-10 {
                    return Err(RotoError::DuplicateAngles);
                }
            }
        }
    }
    let max_sigma_inv =
        samples.iter().map(|s| 1.0 / s.2.max(1e-9)).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> =
        samples.iter().map(|s| (1.0 / s.2.max(1e-9)) / max_sigma_inv).collect();
    let design = Mat::from_fn(samples.len(), cols, |i, j| {
        let u = samples[i].0 * TAU / period;
        let basis = if j == 0 {
            1.0
        } else {
            let k = (j + 1) / 2;
            if j % 2 == 1 { (k as f64 * u).cos() } else { (k as f64 * u).sin() }
        };
        weights[i] * basis
    });
    let rhs: Vec<f64> = samples.iter().zip(&weights).map(|(s, w)| w * s.1).collect();
    let coeffs = linalg::solve_lstsq(&design, &rhs).ok_or(RotoError::DuplicateAngles)?;
    let a0 = coeffs[0];
    let mut a = Vec::with_capacity(n_f);
    let mut b = Vec::with_capacity(n_f);
    for k in 0..n_f {
        a.push(coeffs[1 + 2 * k]);
        b.push(coeffs[2 + 2 * k]);
    }
    Ok(LineModel { period, a0, a, b })
}

const LINE_GRID: usize = 2048;

/// Global minimum of the line model over one period: 2048-point scan
/// (ascending, strict improvement, so ties resolve to the smallest angle)
/// plus a guarded Newton polish on the analytic derivative.
pub fn line_minimum(model: &LineModel) -> (f64, f64) {
    let mut best_u = 0.0;
    let mut best_f = f64::INFINITY;
    for i in 0..LINE_GRID {
        let u = TAU * i as f64 / LINE_GRID as f64;
        let f = model.eval(u * model.period / TAU);
        if f < best_f {
            best_f = f;
            best_u = u;
        }
    }
    let spacing = TAU / LINE_GRID as f64;
    let mut u = best_u;
    for _ in 0..40 {
        let (d1, d2) = model.derivs_u(u);
        if d2 <= 0.0 || !d1.is_finite() {
            break;
        }
        let step = d1 / d2;
        if step.abs() > spacing {
            break;
        }
        u -= step;
        if d1.abs() < 1e-14 {
            break;
        }
    }
    let theta = (u.rem_euclid(TAU)) * model.period / TAU;
    let f = model.eval(theta);
    if f <= best_f {
        (theta, f)
    } else {
        (best_u * model.period / TAU, best_f)
    }
}

/// Wrap-aware Euclidean distance (radians) from an archive point to the
/// coordinate line through `theta` along `axis`.
fn distance_to_line(point: &[f64], theta: &[f64], axis: usize, periods: &[f64]) -> f64 {
    point
        .iter()
        .zip(theta)
        .zip(periods)
        .enumerate()
        .filter(|(k, _)| *k != axis)
        .map(|(_, ((p, t), per))| {
            let d = (p - t).rem_euclid(*per);
            let d = d.min(per - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

pub struct StepOutcome {
    /// Model-predicted cost at the accepted coordinate value.
    pub predicted: f64,
    /// GP failure forced a RotoSolve update.
    pub fallback: bool,
}

/// Shots one step will charge: groups × s × (2ñ_f+1).
fn step_cost(instance: &ProblemInstance, config: &OptimizerConfig, axis: usize) -> u64 {
    (instance.hamiltonian.groups().len() * config.shots * (2 * config.n_f[axis] + 1)) as u64
}

fn rotosolve_update(
    line_pts: &[(f64, f64, f64)],
    n_f: usize,
    period: f64,
) -> Result<(f64, f64), RotoError> {
    let model = trig_line_fit(line_pts, n_f, period)?;
    Ok(line_minimum(&model))
}

/// GP-filtered update: refit on the nearest archive subset (warm-started),
/// then minimize the posterior mean along the line on a 2048-point grid with
/// pattern-search polish.
fn rotogp_update(
    state: &OptimizerState,
    axis: usize,
    kernel: KernelFamily,
    config: &OptimizerConfig,
) -> Result<(f64, f64, ProductKernelSpec), GpError> {
    let n = state.archive_points.len();
    let mut order: Vec<usize> = (0..n).collect();
    if n > config.subset_cap {
        let dists: Vec<f64> = state
            .archive_points
            .iter()
            .map(|p| distance_to_line(p, &state.theta, axis, &config.periods))
            .collect();
        order.sort_by(|&i, &j| dists[i].total_cmp(&dists[j]).then(i.cmp(&j)));
        order.truncate(config.subset_cap);
    }
    let points: Vec<Vec<f64>> = order.iter().map(|&i| state.archive_points[i].clone()).collect();
    let values: Vec<f64> = order.iter().map(|&i| state.archive_values[i]).collect();
    let sigmas: Vec<f64> = order.iter().map(|&i| state.archive_sigmas[i]).collect();
    let train = TrainingSet::new(&points, &values, &sigmas)?;

    let template = match &state.warm {
        Some(spec) => spec.clone(),
        None => ProductKernelSpec::uniform(1.0, kernel, &config.periods, &config.n_f)?,
    };
    let report = gp::optimize_hyperparameters(&template, &train, &config.fit)?;
    let gp = FittedGp::new(report.spec.clone(), train)?;

    // the scan varies one coordinate only, so the product kernel against each
    // training point factors into a constant times the axis line kernel
    let spec = gp.kernel();
    let weights: Vec<(f64, f64)> = gp
        .training()
        .points()
        .zip(gp.alpha())
        .map(|(x, a)| {
            let mut w = *a * spec.amplitude;
            for (l, line) in spec.lines.iter().enumerate() {
                if l != axis {
                    w *= line.eval(state.theta[l], x[l]);
                }
            }
            (w, x[axis])
        })
        .collect();
    let line_k = &spec.lines[axis];
    let mean_at =
        |t: f64| -> f64 { weights.iter().map(|(w, x)| w * line_k.eval(t, *x)).sum() };

    let period = config.periods[axis];
    let mut best_t = 0.0;
    let mut best_f = f64::INFINITY;
    for i in 0..LINE_GRID {
        let t = i as f64 * period / LINE_GRID as f64;
        let f = mean_at(t);
        if f < best_f {
            best_f = f;
            best_t = t;
        }
    }
    let mut h = period / LINE_GRID as f64;
    while h >= 1e-7 {
        let mut improved = false;
        for s in [-1.0, 1.0] {
            let cand = best_t + s * h;
            let v = mean_at(cand);
            if v < best_f {
                best_f = v;
                best_t = cand;
                improved = true;
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    Ok((best_t.rem_euclid(period), best_f, report.spec))
}

/// Measure the line, archive the samples, and move coordinate `axis` to the
/// model's line minimum. Advances s_tot by groups × s × points.
pub fn rotogp_step<R: Rng + ?Sized>(
    state: &mut OptimizerState,
    axis: usize,
    instance: &ProblemInstance,
    config: &OptimizerConfig,
    rng: &mut R,
) -> Result<StepOutcome, RotoError> {
    let dim = instance.dim();
    config.validate(dim)?;
    if axis >= dim {
        return Err(RotoError::InvalidConfig(format!("axis {axis} out of range")));
    }
    let n_f = config.n_f[axis];
    let period = config.periods[axis];
    let sample_points = line_samples(&state.theta, axis, n_f, period);
    let mut line_pts = Vec::with_capacity(sample_points.len());
    for p in &sample_points {
        let est =
            estimate_cost(&instance.circuit, &instance.hamiltonian, p, config.shots, config.noise, rng)?;
        state.archive_points.push(p.clone());
        state.archive_values.push(est.mean);
        state.archive_sigmas.push(est.sigma);
        line_pts.push((p[axis], est.mean, est.sigma));
    }
    state.s_tot += step_cost(instance, config, axis);

    let (new_theta, predicted, fallback) = match &config.mode {
        OptimizerMode::RotoSolve => {
            let (t, f) = rotosolve_update(&line_pts, n_f, period)?;
            (t, f, false)
        }
        OptimizerMode::RotoGp { kernel } => match rotogp_update(state, axis, *kernel, config) {
            Ok((t, f, warm)) => {
                state.warm = Some(warm);
                (t, f, false)
            }
            Err(_) => {
                let (t, f) = rotosolve_update(&line_pts, n_f, period)?;
                (t, f, true)
            }
        },
    };
    state.theta[axis] = new_theta;
    Ok(StepOutcome { predicted, fallback })
}

/// Full run: cyclic coordinate sweeps from a uniform random starting point,
/// recording the oracle cost after every update. Stops at `max_sweeps` or
/// before the first step that would exceed `max_shots`.
pub fn optimize(instance: &ProblemInstance, config: &OptimizerConfig) -> Result<Trajectory, RotoError> {
    let dim = instance.dim();
    config.validate(dim)?;
    let mut rng = rng::stream(config.seed, "rotogp.run", 0);
    let theta0: Vec<f64> =
        config.periods.iter().map(|p| rng.random_range(0.0..*p)).collect();
    let mut state = OptimizerState::new(theta0);
    let mut entries = vec![TrajectoryEntry {
        step: 0,
        axis: None,
        s_tot: 0,
        theta: state.theta.clone(),
        exact_cost: exact_cost(instance, &state.theta)?,
        predicted: f64::NAN,
        fallback: false,
    }];
    let mut step = 0;
    'sweeps: for _ in 0..config.max_sweeps {
        for axis in 0..dim {
            if let Some(budget) = config.max_shots {
                if state.s_tot + step_cost(instance, config, axis) > budget {
                    break 'sweeps;
                }
            }
            step += 1;
            let outcome = rotogp_step(&mut state, axis, instance, config, &mut rng)?;
            entries.push(TrajectoryEntry {
                step,
                axis: Some(axis),
                s_tot: state.s_tot,
                theta: state.theta.clone(),
                exact_cost: exact_cost(instance, &state.theta)?,
                predicted: outcome.predicted,
                fallback: outcome.fallback,
            });
        }
    }
    Ok(Trajectory { theta_final: state.theta.clone(), entries })
}
