//! Marginal-likelihood maximization over log-hyperparameters.
//!
//! The objective is L(h) = log p(y | Θ, h) with gradient
//! ∂L/∂h = ½ tr((ααᵀ − K̃⁻¹) ∂K̃/∂h), α = K̃⁻¹y. For the product kernel the
//! per-line partials come from prefix/suffix products of the remaining line
//! values, so a full gradient costs one O(N²·(dim + H)) pass. Optimization is
//! multi-start L-BFGS projected onto the box [ln 1e−6, ln 1e6].

use super::{factor_noisy, Feats, GpError, TrainingSet};
use crate::kernels::{ProductKernelSpec, HYPER_BOUND_HI, HYPER_BOUND_LO};
use crate::linalg::Spd;
use crate::rng;
use faer::Mat;
use rand::Rng;
use std::f64::consts::TAU;

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    /// Number of optimization starts; the first starts from the template's
    /// own hyperparameters (the warm start), the rest are drawn log-uniform
    /// within the bounds.
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Infinity-norm gradient threshold for convergence (log-space).
    pub grad_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { restarts: 8, max_iters: 80, seed: 0, grad_tol: 1e-5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    /// Optimized kernel (same shape as the template).
    pub spec: ProductKernelSpec,
    pub log_marginal: f64,
    /// Restart index that won (0 = warm start).
    pub winner: usize,
    /// Total L-BFGS iterations across restarts.
    pub iterations: usize,
}

/// Objective context: shape-constant feature cache plus training data.
struct Objective<'a> {
    template: &'a ProductKernelSpec,
    train: &'a TrainingSet,
    feats: Feats,
    /// Per-line offsets into the flattened gradient (after the amplitude).
    offsets: Vec<usize>,
}

impl<'a> Objective<'a> {
    fn new(template: &'a ProductKernelSpec, train: &'a TrainingSet) -> Objective<'a> {
        let feats = Feats::new(template, train.flat(), train.len());
        let mut offsets = Vec::with_capacity(template.dim());
        let mut off = 1;
        for line in &template.lines {
            offsets.push(off);
            off += line.hyper_count();
        }
        Objective { template, train, feats, offsets }
    }

    /// Candidate spec with its noisy Cholesky pieces: (spec, factor, alpha,
    /// log marginal). None when infeasible or non-finite.
    fn chol_parts(&self, log_params: &[f64]) -> Option<(ProductKernelSpec, Spd, Vec<f64>, f64)> {
        let spec = self.template.from_log_params(log_params).ok()?;
        let k = super::gram_sym(&spec, &self.feats);
        let (factor, _) = factor_noisy(&k, self.train.sigmas()).ok()?;
        let alpha = factor.solve_vec(self.train.values());
        let fit: f64 = self.train.values().iter().zip(&alpha).map(|(y, a)| y * a).sum();
        let lml = -0.5 * fit - 0.5 * factor.log_det() - 0.5 * self.train.len() as f64 * TAU.ln();
        if !lml.is_finite() {
            return None;
        }
        Some((spec, factor, alpha, lml))
    }

    /// Log marginal likelihood alone; line-search trials use this to skip the
    /// O(N³) inverse behind the gradient.
    fn eval_value(&self, log_params: &[f64]) -> Option<f64> {
        self.chol_parts(log_params).map(|(_, _, _, lml)| lml)
    }

    /// Log marginal likelihood and its gradient w.r.t. the flattened
    /// log-hyperparameters. None when the Gram matrix cannot be factored.
    fn eval(&self, log_params: &[f64], grad: &mut [f64]) -> Option<f64> {
        let (spec, factor, alpha, lml) = self.chol_parts(log_params)?;
        let n = self.train.len();
        let dim = spec.dim();

        let kinv: Mat<f64> = factor.inverse();
        grad.fill(0.0);
        let mut kv = vec![0.0; dim];
        let mut pre = vec![0.0; dim + 1];
        let mut suf = vec![0.0; dim + 1];
        let mut gbuf = vec![0.0; spec.lines.iter().map(|l| l.hyper_count()).max().unwrap()];
        for i in 0..n {
            for j in 0..=i {
                // W = ααᵀ − K̃⁻¹; off-diagonal pairs count twice.
                let w = alpha[i] * alpha[j] - kinv[(i, j)];
                let ww = if i == j { 0.5 * w } else { w };
                pre[0] = 1.0;
                for d in 0..dim {
                    kv[d] = spec.lines[d].eval_feat(self.feats.row(d, i), self.feats.row(d, j));
                    pre[d + 1] = pre[d] * kv[d];
                }
                suf[dim] = 1.0;
                for d in (0..dim).rev() {
                    suf[d] = suf[d + 1] * kv[d];
                }
                // ∂K/∂log A = K (noise-free part)
                grad[0] += ww * spec.amplitude * pre[dim];
                for d in 0..dim {
                    let complement = spec.amplitude * pre[d] * suf[d + 1];
                    let hc = spec.lines[d].hyper_count();
                    spec.lines[d].eval_feat_grad(
                        self.feats.row(d, i),
                        self.feats.row(d, j),
                        &mut gbuf[..hc],
                    );
                    let base = self.offsets[d];
                    for (t, g) in gbuf[..hc].iter().enumerate() {
                        grad[base + t] += ww * complement * g;
                    }
                }
            }
        }
        Some(lml)
    }
}

const LOG_LO: f64 = -13.815510557964274; // ln 1e−6
const LOG_HI: f64 = 13.815510557964274; // ln 1e6

fn clamp_box(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(LOG_LO, LOG_HI);
    }
}

/// Projected L-BFGS ascent from `x0`. Returns (best point, best value,
/// iterations used), or None when even the start is infeasible.
fn lbfgs_max(
    obj: &Objective,
    x0: &[f64],
    max_iters: usize,
    grad_tol: f64,
) -> Option<(Vec<f64>, f64, usize)> {
    let h = x0.len();
    let m = 8;
    let mut x = x0.to_vec();
    clamp_box(&mut x);
    let mut g = vec![0.0; h];
    let mut f = obj.eval(&x, &mut g)?;
    let mut best = (x.clone(), f);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho: Vec<f64> = Vec::new();
    let mut iters = 0;

    for _ in 0..max_iters {
        iters += 1;
        let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if gmax < grad_tol {
            break;
        }
        // two-loop recursion on the negated gradient (we maximize)
        let mut q: Vec<f64> = g.to_vec();
        let mut a_coef = vec![0.0; s_hist.len()];
        for idx in (0..s_hist.len()).rev() {
            let a = rho[idx] * dot(&s_hist[idx], &q);
            a_coef[idx] = a;
            axpy(&mut q, -a, &y_hist[idx]);
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let scale = dot(s, y) / dot(y, y);
            if scale.is_finite() && scale > 0.0 {
                q.iter_mut().for_each(|v| *v *= scale);
            }
        }
        for idx in 0..s_hist.len() {
            let b = rho[idx] * dot(&y_hist[idx], &q);
            axpy(&mut q, a_coef[idx] - b, &s_hist[idx]);
        }
        // q approximates H·∇f; ascend along it, fall back to the gradient
        let mut dir = q;
        if dot(&dir, &g) <= 0.0 {
            dir.copy_from_slice(&g);
            s_hist.clear();
            y_hist.clear();
            rho.clear();
        }
        // Steepest-ascent steps (no curvature history) get a unit trust
        // region; raw LML gradients can be O(10^2) and would otherwise burn
        // a dozen backtracking halvings per fresh start.
        if s_hist.is_empty() {
            let norm = dot(&dir, &dir).sqrt();
            if norm > 1.0 {
                dir.iter_mut().for_each(|v| *v /= norm);
            }
        }

        // Backtracking line search with box projection. The unit step is
        // evaluated with its gradient (it is usually accepted and the
        // gradient is needed next iteration anyway); shortened trials are
        // value-only so rejections stay cheap.
        let slope = dot(&dir, &g);
        let mut t = 1.0;
        let mut accepted = None;
        for trial in 0..30 {
            let mut xn: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + t * di).collect();
            clamp_box(&mut xn);
            if xn == x {
                break;
            }
            let fn_ = if trial == 0 {
                let mut gn = vec![0.0; h];
                obj.eval(&xn, &mut gn).map(|v| (v, Some(gn)))
            } else {
                obj.eval_value(&xn).map(|v| (v, None))
            };
            if let Some((fn_, gn)) = fn_ {
                if fn_ >= f + 1e-4 * t * slope {
                    accepted = Some((xn, fn_, gn));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            break;
        };
        let gn = match gn {
            Some(gn) => gn,
            None => {
                let mut gn = vec![0.0; h];
                if obj.eval(&xn, &mut gn).is_none() {
                    break;
                }
                gn
            }
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        // maximize: curvature pair uses the gradient change of −f
        let yv: Vec<f64> = g.iter().zip(&gn).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 {
            s_hist.push(s);
            y_hist.push(yv);
            rho.push(1.0 / sy);
            if s_hist.len() > m {
                s_hist.remove(0);
                y_hist.remove(0);
                rho.remove(0);
            }
        }
        let df = fn_ - f;
        x = xn;
        f = fn_;
        g = gn;
        if f > best.1 {
            best = (x.clone(), f);
        }
        if df.abs() < 1e-10 * (1.0 + f.abs()) {
            break;
        }
    }
    Some((best.0, best.1, iters))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Maximizes the log marginal likelihood over the template's hyperparameters.
///
/// Restart 0 starts from the template itself (pass the previous fit to warm
/// start); the others start log-uniform in [1e−6, 1e6]. Results merge
/// deterministically by (likelihood, restart index), so identical seeds give
/// identical reports.
pub fn optimize_hyperparameters(
    template: &ProductKernelSpec,
    train: &TrainingSet,
    options: &FitOptions,
) -> Result<FitReport, GpError> {
    if options.restarts < 1 {
        return Err(GpError::InvalidTraining("restarts must be >= 1".into()));
    }
    if train.is_empty() {
        return Err(GpError::InvalidTraining("cannot fit hyperparameters to an empty training set".into()));
    }
    if train.dim() != template.dim() {
        return Err(GpError::DimensionMismatch { expected: template.dim(), got: train.dim() });
    }
    let obj = Objective::new(template, train);
    let h = template.hyper_count();

    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut total_iters = 0;
    for r in 0..options.restarts {
        let x0 = if r == 0 {
            template.to_log_params()
        } else {
            let mut rng = rng::stream(options.seed, "gp.fit.restart", r as u64);
            (0..h)
                .map(|_| {
                    let lo = HYPER_BOUND_LO.ln();
                    let hi = HYPER_BOUND_HI.ln();
                    rng.random_range(lo..hi)
                })
                .collect()
        };
        let Some((x, f, it)) = lbfgs_max(&obj, &x0, options.max_iters, options.grad_tol) else {
            continue;
        };
        total_iters += it;
        let better = match &best {
            None => true,
            Some((bf, _, _)) => f > *bf,
        };
        if better {
            best = Some((f, r, x));
        }
    }
    let Some((f, winner, x)) = best else {
        return Err(GpError::OptimizationFailed { template: Box::new(template.clone()) });
    };
    let spec = obj.template.from_log_params(&x)?;
    Ok(FitReport { spec, log_marginal: f, winner, iterations: total_iters })
}
