//! Exact Gaussian-process regression with heteroscedastic observation noise.
//!
//! The observation model is y_i = f(θ_i) + ε_i with ε_i ~ N(0, σ_i²), zero
//! prior mean, and covariance given by a [`ProductKernelSpec`]. Inference goes
//! through a Cholesky factorization of K̃ = K + diag(σ²) + jitter·I, where the
//! jitter escalates 1e−10 → 1e−6 (×10 per retry) until the factorization
//! succeeds.

mod fit;

pub use fit::{optimize_hyperparameters, FitOptions, FitReport};

use crate::kernels::ProductKernelSpec;
use crate::linalg::Spd;
use faer::Mat;
use std::f64::consts::TAU;
use thiserror::Error;

pub(crate) const JITTER_LADDER: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Predictive variance floor for density evaluation.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GpError {
    #[error(transparent)]
    Kernel(#[from] crate::kernels::KernelError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid training data: {0}")]
    InvalidTraining(String),
    #[error("covariance matrix is not positive definite after jitter escalation up to {max_jitter:e}")]
    IllConditioned { max_jitter: f64 },
    #[error("hyperparameter optimization failed: no restart reached a finite likelihood")]
    OptimizationFailed { template: Box<ProductKernelSpec> },
    #[error("operation needs a posterior over exactly one test point, got {0}")]
    NotSinglePoint(usize),
}

/// Observed data: points, values, and per-observation noise standard
/// deviations (standard errors of the shot means).
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    dim: usize,
    flat: Vec<f64>,
    values: Vec<f64>,
    sigmas: Vec<f64>,
}

impl TrainingSet {
    pub fn new(points: &[Vec<f64>], values: &[f64], sigmas: &[f64]) -> Result<Self, GpError> {
        if points.is_empty() {
            return Err(GpError::InvalidTraining(
                "no points; use TrainingSet::empty for an explicit prior".into(),
            ));
        }
        if points.len() != values.len() || points.len() != sigmas.len() {
            return Err(GpError::InvalidTraining(format!(
                "length mismatch: {} points, {} values, {} sigmas",
                points.len(),
                values.len(),
                sigmas.len()
            )));
        }
        let mut set = Self::empty(points[0].len());
        for ((p, &y), &s) in points.iter().zip(values).zip(sigmas) {
            set.push(p, y, s)?;
        }
        Ok(set)
    }

    /// No observations: posteriors reduce to the prior.
    pub fn empty(dim: usize) -> Self {
        TrainingSet { dim, flat: Vec::new(), values: Vec::new(), sigmas: Vec::new() }
    }

    pub fn push(&mut self, point: &[f64], value: f64, sigma: f64) -> Result<(), GpError> {
        if point.len() != self.dim {
            return Err(GpError::DimensionMismatch { expected: self.dim, got: point.len() });
        }
        if point.iter().any(|x| !x.is_finite()) || !value.is_finite() {
            return Err(GpError::InvalidTraining("points and values must be finite".into()));
        }
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(GpError::InvalidTraining(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        self.flat.extend_from_slice(point);
        self.values.push(value);
        self.sigmas.push(sigma);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.flat[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.flat.chunks_exact(self.dim.max(1))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub(crate) fn flat(&self) -> &[f64] {
        &self.flat
    }
}

/// Per-line, per-point kernel features for fast pairwise evaluation.
/// Features depend only on the kernel shape (family, period, cutoff), never
/// on hyperparameter values, so one cache serves a whole fit.
pub(crate) struct Feats {
    per_line: Vec<Vec<f64>>,
    lens: Vec<usize>,
    n: usize,
}

impl Feats {
    pub(crate) fn new(spec: &ProductKernelSpec, flat: &[f64], n: usize) -> Feats {
        let dim = spec.dim();
        debug_assert_eq!(flat.len(), n * dim);
        let mut per_line = Vec::with_capacity(dim);
        let mut lens = Vec::with_capacity(dim);
        for (d, line) in spec.lines.iter().enumerate() {
            let fl = line.feat_len();
            let mut col = vec![0.0; n * fl];
            for i in 0..n {
                line.write_features(flat[i * dim + d], &mut col[i * fl..(i + 1) * fl]);
            }
            per_line.push(col);
            lens.push(fl);
        }
        Feats { per_line, lens, n }
    }

    #[inline]
    pub(crate) fn row(&self, line: usize, i: usize) -> &[f64] {
        let fl = self.lens[line];
        &self.per_line[line][i * fl..(i + 1) * fl]
    }

    pub(crate) fn len(&self) -> usize {
        self.n
    }
}

/// Symmetric Gram matrix K(Θ, Θ) of the product kernel (amplitude included,
/// no noise diagonal).
pub(crate) fn gram_sym(spec: &ProductKernelSpec, feats: &Feats) -> Mat<f64> {
    let n = feats.len();
    let dim = spec.dim();
    let mut k = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut v = spec.amplitude;
            for d in 0..dim {
                v *= spec.lines[d].eval_feat(feats.row(d, i), feats.row(d, j));
            }
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Rectangular cross-Gram K(Θ_a, Θ_b).
pub(crate) fn gram_cross(spec: &ProductKernelSpec, fa: &Feats, fb: &Feats) -> Mat<f64> {
    let (m, n) = (fa.len(), fb.len());
    let dim = spec.dim();
    let mut k = Mat::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let mut v = spec.amplitude;
            for d in 0..dim {
                v *= spec.lines[d].eval_feat(fa.row(d, i), fb.row(d, j));
            }
            k[(i, j)] = v;
        }
    }
    k
}

fn flatten_queries(dim: usize, queries: &[Vec<f64>]) -> Result<Vec<f64>, GpError> {
    let mut flat = Vec::with_capacity(queries.len() * dim);
    for q in queries {
        if q.len() != dim {
            return Err(GpError::DimensionMismatch { expected: dim, got: q.len() });
        }
        flat.extend_from_slice(q);
    }
    Ok(flat)
}

/// Pairwise kernel matrix between two point sets (row-major).
pub fn gram(
    spec: &ProductKernelSpec,
    points_a: &[Vec<f64>],
    points_b: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, GpError> {
    let fa = Feats::new(spec, &flatten_queries(spec.dim(), points_a)?, points_a.len());
    let fb = Feats::new(spec, &flatten_queries(spec.dim(), points_b)?, points_b.len());
    let k = gram_cross(spec, &fa, &fb);
    Ok((0..points_a.len()).map(|i| (0..points_b.len()).map(|j| k[(i, j)]).collect()).collect())
}

/// Gaussian predictive distribution at a set of test points.
#[derive(Clone, Debug)]
pub struct Posterior {
    mean: Vec<f64>,
    variance: Vec<f64>,
    cov: Option<Vec<f64>>,
}

impl Posterior {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Predictive variances (covariance diagonal clamped to ≥ 0).
    pub fn variance(&self) -> &[f64] {
        &self.variance
    }

    /// Full predictive covariance, row-major, when it was requested.
    pub fn covariance(&self) -> Option<&[f64]> {
        self.cov.as_deref()
    }

    pub fn cov_at(&self, i: usize, j: usize) -> Option<f64> {
        self.cov.as_ref().map(|c| c[i * self.len() + j])
    }
}

/// A GP conditioned on a training set: caches the Cholesky factor and the
/// weight vector α = K̃⁻¹y so repeated predictions stay cheap.
pub struct FittedGp {
    spec: ProductKernelSpec,
    train: TrainingSet,
    feats: Feats,
    factor: Option<Spd>,
    alpha: Vec<f64>,
    log_marginal: f64,
    jitter: f64,
}

/// Factor K + diag(σ² + jitter) with the escalation ladder. Returns the
/// factorization and the jitter that succeeded.
pub(crate) fn factor_noisy(k: &Mat<f64>, sigmas: &[f64]) -> Result<(Spd, f64), GpError> {
    let n = sigmas.len();
    let mut kt = k.clone();
    for &jitter in JITTER_LADDER.iter() {
        for i in 0..n {
            kt[(i, i)] = k[(i, i)] + sigmas[i] * sigmas[i] + jitter;
        }
        if let Some(f) = Spd::factor(&kt) {
            return Ok((f, jitter));
        }
    }
    Err(GpError::IllConditioned { max_jitter: *JITTER_LADDER.last().unwrap() })
}

impl FittedGp {
    pub fn new(spec: ProductKernelSpec, train: TrainingSet) -> Result<Self, GpError> {
        if !train.is_empty() && train.dim() != spec.dim() {
            return Err(GpError::DimensionMismatch { expected: spec.dim(), got: train.dim() });
        }
        let n = train.len();
        let feats = Feats::new(&spec, train.flat(), n);
        if n == 0 {
            return Ok(FittedGp {
                spec,
                train,
                feats,
                factor: None,
                alpha: Vec::new(),
                log_marginal: 0.0,
                jitter: 0.0,
            });
        }
        let k = gram_sym(&spec, &feats);
        let (factor, jitter) = factor_noisy(&k, train.sigmas())?;
        let alpha = factor.solve_vec(train.values());
        let fit: f64 = train.values().iter().zip(&alpha).map(|(y, a)| y * a).sum();
        let log_marginal = -0.5 * fit - 0.5 * factor.log_det() - 0.5 * n as f64 * TAU.ln();
        Ok(FittedGp { spec, train, feats, factor: Some(factor), alpha, log_marginal, jitter })
    }

    pub fn kernel(&self) -> &ProductKernelSpec {
        &self.spec
    }

    pub fn training(&self) -> &TrainingSet {
        &self.train
    }

    pub fn log_marginal(&self) -> f64 {
        self.log_marginal
    }

    /// Jitter that was added to the noisy diagonal (0 for an empty set).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub(crate) fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Posterior mean only: K_{*,Θ} α. The cheap path for argmin scans.
    pub fn predict_mean(&self, queries: &[Vec<f64>]) -> Result<Vec<f64>, GpError> {
        let m = queries.len();
        let fq = Feats::new(&self.spec, &flatten_queries(self.spec.dim(), queries)?, m);
        if self.train.is_empty() {
            return Ok(vec![0.0; m]);
        }
        let kxs = gram_cross(&self.spec, &fq, &self.feats);
        Ok((0..m).map(|i| (0..self.train.len()).map(|j| kxs[(i, j)] * self.alpha[j]).sum()).collect())
    }

    pub fn posterior(&self, queries: &[Vec<f64>]) -> Result<Posterior, GpError> {
        self.posterior_impl(queries, false)
    }

    /// Posterior including the full predictive covariance matrix.
    pub fn posterior_full(&self, queries: &[Vec<f64>]) -> Result<Posterior, GpError> {
        self.posterior_impl(queries, true)
    }

    fn posterior_impl(&self, queries: &[Vec<f64>], with_cov: bool) -> Result<Posterior, GpError> {
        let m = queries.len();
        let dim = self.spec.dim();
        let flat = flatten_queries(dim, queries)?;
        let fq = Feats::new(&self.spec, &flat, m);
        let prior_diag: Vec<f64> =
            (0..m).map(|i| (0..dim).fold(self.spec.amplitude, |p, d| p * self.spec.lines[d].eval_feat(fq.row(d, i), fq.row(d, i)))).collect();

        if self.train.is_empty() {
            let cov = with_cov.then(|| {
                let kss = gram_cross(&self.spec, &fq, &fq);
                let mut c = Vec::with_capacity(m * m);
                for i in 0..m {
                    for j in 0..m {
                        c.push(kss[(i, j)]);
                    }
                }
                c
            });
            return Ok(Posterior { mean: vec![0.0; m], variance: prior_diag, cov });
        }

        let factor = self.factor.as_ref().unwrap();
        let kxs = gram_cross(&self.spec, &fq, &self.feats);
        let n = self.train.len();
        let mean: Vec<f64> =
            (0..m).map(|i| (0..n).map(|j| kxs[(i, j)] * self.alpha[j]).sum()).collect();
        // V = K̃⁻¹ K_{Θ,*}
        let v = factor.solve_mat(&kxs.transpose().to_owned());
        let variance: Vec<f64> = (0..m)
            .map(|i| {
                let reduction: f64 = (0..n).map(|j| kxs[(i, j)] * v[(j, i)]).sum();
                (prior_diag[i] - reduction).max(0.0)
            })
            .collect();
        let cov = with_cov.then(|| {
            let kss = gram_cross(&self.spec, &fq, &fq);
            let mut c = vec![0.0; m * m];
            for i in 0..m {
                for j in 0..m {
                    let reduction: f64 = (0..n).map(|t| kxs[(i, t)] * v[(t, j)]).sum();
                    let val = kss[(i, j)] - reduction;
                    c[i * m + j] = if i == j { val.max(0.0) } else { val };
                }
            }
            c
        });
        Ok(Posterior { mean, variance, cov })
    }
}

/// Posterior of the GP defined by `spec` conditioned on `train`, evaluated at
/// `queries` (full covariance included). With an empty training set this is
/// the prior: zero mean, covariance K(Θ*, Θ*).
pub fn posterior(
    spec: &ProductKernelSpec,
    train: &TrainingSet,
    queries: &[Vec<f64>],
) -> Result<Posterior, GpError> {
    FittedGp::new(spec.clone(), train.clone())?.posterior_full(queries)
}

/// Log of the marginal likelihood −½yᵀK̃⁻¹y − ½log det K̃ − (N/2)log 2π,
/// computed through the Cholesky factor.
pub fn log_marginal_likelihood(spec: &ProductKernelSpec, train: &TrainingSet) -> Result<f64, GpError> {
    Ok(FittedGp::new(spec.clone(), train.clone())?.log_marginal())
}

/// Gaussian predictive density of observing `value` under a single-point
/// posterior. The variance is floored at [`VARIANCE_FLOOR`].
pub fn point_likelihood(post: &Posterior, value: f64) -> Result<f64, GpError> {
    log_point_likelihood(post, value).map(f64::exp)
}

/// Log predictive density; preferred when densities underflow.
pub fn log_point_likelihood(post: &Posterior, value: f64) -> Result<f64, GpError> {
    if post.len() != 1 {
        return Err(GpError::NotSinglePoint(post.len()));
    }
    let v = post.variance[0].max(VARIANCE_FLOOR);
    let d = value - post.mean[0];
    Ok(-0.5 * d * d / v - 0.5 * (TAU * v).ln())
}
