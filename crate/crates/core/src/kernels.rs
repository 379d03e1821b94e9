//! One-dimensional line kernels and their product composition.
//!
//! Families: squared exponential, Matérn 3/2 and 5/2, periodic SE, and the
//! trigonometric kernels (non-stationary `TrigNs`, stationary `TrigS`, plus
//! `*Ext` variants carrying a closed-form exponentially-decaying frequency
//! tail). Trigonometric kernels are built from a truncated Fourier basis with
//! per-frequency amplitudes and are normalized so the average of k(θ, θ) over
//! one period is exactly 1; the overall scale of a multi-dimensional kernel
//! lives solely in [`ProductKernelSpec::amplitude`].
//!
//! Periodic families rescale inputs by 2π/period internally, so all formulas
//! below are written for angles on [0, 2π).

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Hyperparameter search bounds (log-space optimization domain).
pub const HYPER_BOUND_LO: f64 = 1e-6;
pub const HYPER_BOUND_HI: f64 = 1e6;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("hyperparameter vector for {family:?} must have length {expected}, got {got}")]
    HyperparameterCount { family: KernelFamily, expected: usize, got: usize },
    #[error("dimension mismatch: kernel has {expected} lines, point has {got} coordinates")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Se,
    Matern32,
    Matern52,
    PeriodicSe,
    TrigNs,
    TrigS,
    TrigNsExt,
    TrigSExt,
}

impl KernelFamily {
    pub fn is_trig(self) -> bool {
        matches!(self, Self::TrigNs | Self::TrigS | Self::TrigNsExt | Self::TrigSExt)
    }

    pub fn is_extended(self) -> bool {
        matches!(self, Self::TrigNsExt | Self::TrigSExt)
    }

    pub fn is_stationary(self) -> bool {
        !matches!(self, Self::TrigNs | Self::TrigNsExt)
    }

    /// Expected hyperparameter count for frequency cutoff `n_f`.
    pub fn hyper_count(self, n_f: usize) -> usize {
        match self {
            Self::Se | Self::Matern32 | Self::Matern52 | Self::PeriodicSe => 1,
            Self::TrigNs => 2 * n_f + 1,
            Self::TrigS => n_f + 1,
            Self::TrigNsExt => 2 * n_f + 3,
            Self::TrigSExt => n_f + 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Se => "se",
            Self::Matern32 => "matern32",
            Self::Matern52 => "matern52",
            Self::PeriodicSe => "periodic_se",
            Self::TrigNs => "trig_ns",
            Self::TrigS => "trig_s",
            Self::TrigNsExt => "trig_ns_ext",
            Self::TrigSExt => "trig_s_ext",
        }
    }
}

/// One-dimensional kernel: family, period, frequency cutoff, hyperparameters.
///
/// Hyperparameter layout:
/// * `Se` / `Matern32` / `Matern52` / `PeriodicSe` — `[l]` (length scale);
/// * `TrigNs` — `[γ_0, γ_1..γ_{n_f}, δ_1..δ_{n_f}]`;
/// * `TrigS` — `[γ_0, γ_1..γ_{n_f}]`;
/// * `TrigNsExt` / `TrigSExt` — base layout followed by `[α, β]`.
///
/// Evaluation accepts zero frequency amplitudes and α = 0 (as long as the
/// normalization Γ stays positive); fitted specs are strictly positive because
/// the optimizer works in log-space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "repr::LineKernelRepr", into = "repr::LineKernelRepr")]
pub struct LineKernelSpec {
    family: KernelFamily,
    period: f64,
    freq_cutoff: usize,
    hyperparams: Vec<f64>,
}

impl LineKernelSpec {
    pub fn new(
        family: KernelFamily,
        period: f64,
        freq_cutoff: usize,
        hyperparams: Vec<f64>,
    ) -> Result<Self, KernelError> {
        let spec = LineKernelSpec { family, period, freq_cutoff, hyperparams };
        spec.validate()?;
        Ok(spec)
    }

    pub fn se(l: f64) -> Result<Self, KernelError> {
        Self::new(KernelFamily::Se, TAU, 0, vec![l])
    }

    pub fn matern32(l: f64) -> Result<Self, KernelError> {
        Self::new(KernelFamily::Matern32, TAU, 0, vec![l])
    }

    pub fn matern52(l: f64) -> Result<Self, KernelError> {
        Self::new(KernelFamily::Matern52, TAU, 0, vec![l])
    }

    pub fn periodic_se(l: f64, period: f64) -> Result<Self, KernelError> {
        Self::new(KernelFamily::PeriodicSe, period, 0, vec![l])
    }

    pub fn trig_ns(period: f64, gamma: &[f64], delta: &[f64]) -> Result<Self, KernelError> {
        if gamma.len() != delta.len() + 1 {
            return Err(KernelError::InvalidHyperparameter(
                "trig_ns needs gamma = [γ_0..γ_n_f] and delta = [δ_1..δ_n_f]".into(),
            ));
        }
        let n_f = delta.len();
        let mut h = gamma.to_vec();
        h.extend_from_slice(delta);
        Self::new(KernelFamily::TrigNs, period, n_f, h)
    }

    pub fn trig_s(period: f64, gamma: &[f64]) -> Result<Self, KernelError> {
        if gamma.is_empty() {
            return Err(KernelError::InvalidHyperparameter("trig_s needs gamma = [γ_0..γ_n_f]".into()));
        }
        Self::new(KernelFamily::TrigS, period, gamma.len() - 1, gamma.to_vec())
    }

    pub fn trig_ns_ext(
        period: f64,
        gamma: &[f64],
        delta: &[f64],
        alpha: f64,
        beta: f64,
    ) -> Result<Self, KernelError> {
        let base = Self::trig_ns(period, gamma, delta)?;
        let mut h = base.hyperparams;
        h.push(alpha);
        h.push(beta);
        Self::new(KernelFamily::TrigNsExt, period, base.freq_cutoff, h)
    }

    pub fn trig_s_ext(period: f64, gamma: &[f64], alpha: f64, beta: f64) -> Result<Self, KernelError> {
        let base = Self::trig_s(period, gamma)?;
        let mut h = base.hyperparams;
        h.push(alpha);
        h.push(beta);
        Self::new(KernelFamily::TrigSExt, period, base.freq_cutoff, h)
    }

    /// Fit template: every hyperparameter set to 1.
    pub fn template(family: KernelFamily, period: f64, n_f: usize) -> Result<Self, KernelError> {
        Self::new(family, period, n_f, vec![1.0; family.hyper_count(n_f)])
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn freq_cutoff(&self) -> usize {
        self.freq_cutoff
    }

    pub fn hyperparams(&self) -> &[f64] {
        &self.hyperparams
    }

    pub fn hyper_count(&self) -> usize {
        self.hyperparams.len()
    }

    /// Replaces the hyperparameter vector, revalidating.
    pub fn with_hyperparams(&self, hyperparams: Vec<f64>) -> Result<Self, KernelError> {
        Self::new(self.family, self.period, self.freq_cutoff, hyperparams)
    }

    fn validate(&self) -> Result<(), KernelError> {
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(KernelError::InvalidHyperparameter(format!(
                "period must be positive and finite, got {}",
                self.period
            )));
        }
        let expected = self.family.hyper_count(self.freq_cutoff);
        if self.hyperparams.len() != expected {
            return Err(KernelError::HyperparameterCount {
                family: self.family,
                expected,
                got: self.hyperparams.len(),
            });
        }
        if self.hyperparams.iter().any(|h| !h.is_finite() || *h < 0.0) {
            return Err(KernelError::InvalidHyperparameter(
                "hyperparameters must be finite and nonnegative".into(),
            ));
        }
        match self.family {
            KernelFamily::Se | KernelFamily::Matern32 | KernelFamily::Matern52 | KernelFamily::PeriodicSe => {
                if self.hyperparams[0] <= 0.0 {
                    return Err(KernelError::InvalidHyperparameter("length scale must be > 0".into()));
                }
            }
            _ => {
                if self.family.is_extended() {
                    let beta = self.hyperparams[self.hyperparams.len() - 1];
                    if beta <= 0.0 {
                        return Err(KernelError::InvalidHyperparameter(
                            "β must be > 0 (the frequency tail is a geometric series)".into(),
                        ));
                    }
                }
                if !(self.gamma_norm() > 0.0) {
                    return Err(KernelError::InvalidHyperparameter(
                        "trig normalization Γ must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Normalization Γ: the period-average of the un-normalized diagonal.
    /// `TrigNs`: γ_0 + ½Σ(γ_n+δ_n); `TrigS`: γ_0 + Σγ_n; extended: + α.
    pub fn gamma_norm(&self) -> f64 {
        let h = &self.hyperparams;
        let n_f = self.freq_cutoff;
        let mut g = match self.family {
            KernelFamily::TrigNs | KernelFamily::TrigNsExt => {
                h[0] + 0.5 * (1..=2 * n_f).map(|i| h[i]).sum::<f64>()
            }
            KernelFamily::TrigS | KernelFamily::TrigSExt => h[..=n_f].iter().sum(),
            _ => return 1.0,
        };
        if self.family.is_extended() {
            g += h[self.hyperparams.len() - 2];
        }
        g
    }

    /// k(a, b). Stationary families depend only on a − b.
    pub fn eval(&self, a: f64, b: f64) -> f64 {
        let h = &self.hyperparams;
        match self.family {
            KernelFamily::Se => se_of(h[0], a - b),
            KernelFamily::Matern32 => matern32_of(h[0], (a - b).abs()),
            KernelFamily::Matern52 => matern52_of(h[0], (a - b).abs()),
            KernelFamily::PeriodicSe => pse_of(h[0], self.period, a - b),
            _ => {
                let u = TAU / self.period;
                self.trig_eval(a * u, b * u, None)
            }
        }
    }

    /// Trig evaluation on rescaled angles; optionally accumulates
    /// ∂k/∂(log hyperparam) into `grad` (layout = hyperparameter layout).
    fn trig_eval(&self, ua: f64, ub: f64, grad: Option<&mut [f64]>) -> f64 {
        let h = &self.hyperparams;
        let n_f = self.freq_cutoff;
        let gamma_norm = self.gamma_norm();
        let stationary = self.family.is_stationary();

        let mut s = h[0];
        // Angle-addition recurrence for cos(n·x), sin(n·x).
        let (c1a, s1a) = (ua.cos(), ua.sin());
        let (c1b, s1b) = (ub.cos(), ub.sin());
        let (mut ca, mut sa, mut cb, mut sb) = (1.0, 0.0, 1.0, 0.0);
        let mut terms = Vec::new();
        for n in 1..=n_f {
            let (nca, nsa) = (ca * c1a - sa * s1a, sa * c1a + ca * s1a);
            let (ncb, nsb) = (cb * c1b - sb * s1b, sb * c1b + cb * s1b);
            ca = nca;
            sa = nsa;
            cb = ncb;
            sb = nsb;
            let (cc, ss) = (ca * cb, sa * sb);
            if stationary {
                s += h[n] * (cc + ss);
            } else {
                s += h[n] * cc + h[n_f + n] * ss;
            }
            if grad.is_some() {
                terms.push((cc, ss));
            }
        }
        let mut tail = 0.0;
        let mut dtail_dbeta = 0.0;
        if self.family.is_extended() {
            let alpha = h[h.len() - 2];
            let beta = h[h.len() - 1];
            // cos/sin of the rescaled lag from the frequency-1 values.
            let cx = c1a * c1b + s1a * s1b;
            let sx = s1a * c1b - c1a * s1b;
            let (t, dt) = trig_tail_and_dbeta(beta, cx, sx);
            tail = t;
            if grad.is_some() {
                dtail_dbeta = dt;
            }
            s += alpha * tail;
        }
        let k = s / gamma_norm;

        if let Some(grad) = grad {
            // k = S/Γ with both S and Γ linear in the amplitudes:
            // ∂k/∂h = (∂S/∂h − k·∂Γ/∂h)/Γ, then ×h for the log-domain.
            grad[0] = h[0] * (1.0 - k * 1.0) / gamma_norm;
            for n in 1..=n_f {
                let (cc, ss) = terms[n - 1];
                if stationary {
                    grad[n] = h[n] * ((cc + ss) - k) / gamma_norm;
                } else {
                    grad[n] = h[n] * (cc - k * 0.5) / gamma_norm;
                    grad[n_f + n] = h[n_f + n] * (ss - k * 0.5) / gamma_norm;
                }
            }
            if self.family.is_extended() {
                let ia = h.len() - 2;
                let ib = h.len() - 1;
                grad[ia] = h[ia] * (tail - k) / gamma_norm;
                grad[ib] = h[ib] * h[ia] * dtail_dbeta / gamma_norm;
            }
        }
        k
    }
}

/// Exponential frequency tail Σ_{n≥1} e^{−βn} cos(nξ), normalized to 1 at
/// ξ = 0: T = Re[(e^β − 1)/(e^{β+iξ} − 1)]. Returns (T, ∂T/∂β).
fn trig_tail_and_dbeta(beta: f64, cos_xi: f64, sin_xi: f64) -> (f64, f64) {
    let eb = beta.exp();
    // e^{β+iξ} − 1
    let dr = eb * cos_xi - 1.0;
    let di = eb * sin_xi;
    let d2 = dr * dr + di * di;
    let t = (eb - 1.0) * dr / d2;
    // ∂T/∂β = Re[e^β (e^{iξ} − 1) / (e^{β+iξ} − 1)²]
    let nr = eb * (cos_xi - 1.0);
    let ni = eb * sin_xi;
    // (e^{β+iξ} − 1)² = (dr + i·di)²
    let qr = dr * dr - di * di;
    let qi = 2.0 * dr * di;
    let q2 = qr * qr + qi * qi;
    let dt = (nr * qr + ni * qi) / q2;
    (t, dt)
}

fn se_of(l: f64, xi: f64) -> f64 {
    (-xi * xi / (2.0 * l * l)).exp()
}

fn matern32_of(l: f64, xi: f64) -> f64 {
    let u = 3.0f64.sqrt() * xi / l;
    (1.0 + u) * (-u).exp()
}

fn matern52_of(l: f64, xi: f64) -> f64 {
    let u = 5.0f64.sqrt() * xi / l;
    (1.0 + u + u * u / 3.0) * (-u).exp()
}

fn pse_of(l: f64, p: f64, xi: f64) -> f64 {
    let w = (p / PI) * (PI * xi / p).sin();
    (-w * w / (2.0 * l * l)).exp()
}

/// Squared-exponential kernel exp(−ξ²/2l²).
pub fn k_se(l: f64, xi: f64) -> Result<f64, KernelError> {
    if !(l > 0.0) {
        return Err(KernelError::InvalidHyperparameter("length scale must be > 0".into()));
    }
    Ok(se_of(l, xi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaternNu {
    ThreeHalves,
    FiveHalves,
}

/// Matérn kernel at ν = 3/2 or 5/2.
pub fn k_matern(nu: MaternNu, l: f64, xi: f64) -> Result<f64, KernelError> {
    if !(l > 0.0) {
        return Err(KernelError::InvalidHyperparameter("length scale must be > 0".into()));
    }
    let xi = xi.abs();
    Ok(match nu {
        MaternNu::ThreeHalves => matern32_of(l, xi),
        MaternNu::FiveHalves => matern52_of(l, xi),
    })
}

/// Periodic squared-exponential kernel exp(−[(p/π)sin(πξ/p)]²/2l²).
pub fn k_pse(l: f64, p: f64, xi: f64) -> Result<f64, KernelError> {
    if !(l > 0.0) || !(p > 0.0) {
        return Err(KernelError::InvalidHyperparameter("l and p must be > 0".into()));
    }
    Ok(pse_of(l, p, xi))
}

/// Non-stationary trigonometric kernel
/// {γ_0 + Σ_n [γ_n cos(nθ)cos(nθ') + δ_n sin(nθ)sin(nθ')]}/Γ.
pub fn k_trig_ns(spec: &LineKernelSpec, theta: f64, theta_p: f64) -> Result<f64, KernelError> {
    if spec.family != KernelFamily::TrigNs {
        return Err(KernelError::InvalidHyperparameter("spec family must be trig_ns".into()));
    }
    Ok(spec.eval(theta, theta_p))
}

/// Stationary trigonometric kernel {γ_0 + Σ_n γ_n cos(nξ)}/Γ.
pub fn k_trig_s(spec: &LineKernelSpec, xi: f64) -> Result<f64, KernelError> {
    if spec.family != KernelFamily::TrigS {
        return Err(KernelError::InvalidHyperparameter("spec family must be trig_s".into()));
    }
    Ok(spec.eval(xi, 0.0))
}

/// Extended trigonometric kernel: base trig kernel plus the closed-form
/// exponential frequency tail α·Re[(e^β−1)/(e^{β+iξ}−1)], with Γ including α.
pub fn k_trig_ext(spec: &LineKernelSpec, theta: f64, theta_p: f64) -> Result<f64, KernelError> {
    if !spec.family.is_extended() {
        return Err(KernelError::InvalidHyperparameter("spec family must be trig_ns_ext or trig_s_ext".into()));
    }
    Ok(spec.eval(theta, theta_p))
}

/// Normalized tail term value at rescaled lag ξ (exposed for verification).
pub fn trig_tail(beta: f64, xi: f64) -> Result<f64, KernelError> {
    if !(beta > 0.0) {
        return Err(KernelError::InvalidHyperparameter("β must be > 0".into()));
    }
    Ok(trig_tail_and_dbeta(beta, xi.cos(), xi.sin()).0)
}

/// Product kernel A·Π_n k_n(θ_n, θ'_n): one line kernel per parameter
/// dimension, one global amplitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductKernelSpec {
    pub amplitude: f64,
    pub lines: Vec<LineKernelSpec>,
}

impl ProductKernelSpec {
    pub fn new(amplitude: f64, lines: Vec<LineKernelSpec>) -> Result<Self, KernelError> {
        if lines.is_empty() {
            return Err(KernelError::InvalidHyperparameter("product kernel needs at least one line".into()));
        }
        if !(amplitude > 0.0) || !amplitude.is_finite() {
            return Err(KernelError::InvalidHyperparameter("amplitude must be positive and finite".into()));
        }
        Ok(ProductKernelSpec { amplitude, lines })
    }

    /// Same family on every line.
    pub fn uniform(
        amplitude: f64,
        family: KernelFamily,
        periods: &[f64],
        n_f: &[usize],
    ) -> Result<Self, KernelError> {
        assert_eq!(periods.len(), n_f.len());
        let lines = periods
            .iter()
            .zip(n_f)
            .map(|(&p, &nf)| LineKernelSpec::template(family, p, nf))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(amplitude, lines)
    }

    pub fn dim(&self) -> usize {
        self.lines.len()
    }

    /// Total hyperparameter count (amplitude + per-line counts).
    pub fn hyper_count(&self) -> usize {
        1 + self.lines.iter().map(|l| l.hyper_count()).sum::<usize>()
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), self.lines.len());
        assert_eq!(b.len(), self.lines.len());
        let mut k = self.amplitude;
        for (n, line) in self.lines.iter().enumerate() {
            k *= line.eval(a[n], b[n]);
        }
        k
    }

    /// Flattened log-hyperparameters: [ln A, per-line ln h..] (fit domain).
    pub fn to_log_params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.hyper_count());
        v.push(self.amplitude.max(HYPER_BOUND_LO).ln());
        for line in &self.lines {
            v.extend(line.hyperparams().iter().map(|h| h.max(HYPER_BOUND_LO).ln()));
        }
        v
    }

    /// Rebuild a spec with this shape from flattened log-hyperparameters.
    pub fn from_log_params(&self, log_params: &[f64]) -> Result<Self, KernelError> {
        if log_params.len() != self.hyper_count() {
            return Err(KernelError::HyperparameterCount {
                family: self.lines[0].family,
                expected: self.hyper_count(),
                got: log_params.len(),
            });
        }
        let mut it = log_params.iter().map(|x| x.exp());
        let amplitude = it.next().unwrap();
        let mut lines = Vec::with_capacity(self.lines.len());
        for line in &self.lines {
            let h: Vec<f64> = (&mut it).take(line.hyper_count()).collect();
            lines.push(line.with_hyperparams(h)?);
        }
        Self::new(amplitude, lines)
    }
}

/// Product kernel evaluation with dimension checking.
pub fn k_product(spec: &ProductKernelSpec, a: &[f64], b: &[f64]) -> Result<f64, KernelError> {
    if a.len() != spec.dim() || b.len() != spec.dim() {
        return Err(KernelError::DimensionMismatch {
            expected: spec.dim(),
            got: if a.len() != spec.dim() { a.len() } else { b.len() },
        });
    }
    Ok(spec.eval(a, b))
}

// ---------------------------------------------------------------------------
// Point features: per-point precomputation so Gram assembly avoids per-pair
// trig calls. `feat_len` values per point; pairwise evaluation consumes two
// feature slices.
// ---------------------------------------------------------------------------

impl LineKernelSpec {
    pub(crate) fn feat_len(&self) -> usize {
        match self.family {
            KernelFamily::Se | KernelFamily::Matern32 | KernelFamily::Matern52 => 1,
            KernelFamily::PeriodicSe => 2,
            _ => 2 * self.freq_cutoff.max(if self.family.is_extended() { 1 } else { 0 }),
        }
    }

    pub(crate) fn write_features(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.feat_len());
        match self.family {
            KernelFamily::Se | KernelFamily::Matern32 | KernelFamily::Matern52 => out[0] = x,
            KernelFamily::PeriodicSe => {
                let u = x * TAU / self.period;
                out[0] = u.cos();
                out[1] = u.sin();
            }
            _ => {
                let u = x * TAU / self.period;
                let (c1, s1) = (u.cos(), u.sin());
                let (mut c, mut s) = (1.0, 0.0);
                for n in 0..out.len() / 2 {
                    let (nc, ns) = (c * c1 - s * s1, s * c1 + c * s1);
                    c = nc;
                    s = ns;
                    out[2 * n] = c;
                    out[2 * n + 1] = s;
                }
            }
        }
    }

    /// k from two feature slices; must agree with `eval`.
    pub(crate) fn eval_feat(&self, fa: &[f64], fb: &[f64]) -> f64 {
        self.feat_eval_impl(fa, fb, None)
    }

    /// k plus ∂k/∂(log h) per hyperparameter.
    pub(crate) fn eval_feat_grad(&self, fa: &[f64], fb: &[f64], grad: &mut [f64]) -> f64 {
        self.feat_eval_impl(fa, fb, Some(grad))
    }

    fn feat_eval_impl(&self, fa: &[f64], fb: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let h = &self.hyperparams;
        match self.family {
            KernelFamily::Se => {
                let xi = fa[0] - fb[0];
                let k = se_of(h[0], xi);
                if let Some(g) = grad {
                    g[0] = k * xi * xi / (h[0] * h[0]);
                }
                k
            }
            KernelFamily::Matern32 => {
                let u = 3.0f64.sqrt() * (fa[0] - fb[0]).abs() / h[0];
                let e = (-u).exp();
                if let Some(g) = grad {
                    g[0] = u * u * e;
                }
                (1.0 + u) * e
            }
            KernelFamily::Matern52 => {
                let u = 5.0f64.sqrt() * (fa[0] - fb[0]).abs() / h[0];
                let e = (-u).exp();
                if let Some(g) = grad {
                    g[0] = u * u * (1.0 + u) / 3.0 * e;
                }
                (1.0 + u + u * u / 3.0) * e
            }
            KernelFamily::PeriodicSe => {
                // sin²(πξ/p) = (1 − cos(2πξ/p))/2 from the unit features.
                let cos_xi = fa[0] * fb[0] + fa[1] * fb[1];
                let w2 = (self.period / PI).powi(2) * 0.5 * (1.0 - cos_xi);
                let e = w2 / (2.0 * h[0] * h[0]);
                let k = (-e).exp();
                if let Some(g) = grad {
                    g[0] = 2.0 * e * k;
                }
                k
            }
            _ => self.trig_eval_feat(fa, fb, grad),
        }
    }

    fn trig_eval_feat(&self, fa: &[f64], fb: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let h = &self.hyperparams;
        let n_f = self.freq_cutoff;
        let gamma_norm = self.gamma_norm();
        let stationary = self.family.is_stationary();

        let mut s = h[0];
        for n in 1..=n_f {
            let cc = fa[2 * n - 2] * fb[2 * n - 2];
            let ss = fa[2 * n - 1] * fb[2 * n - 1];
            if stationary {
                s += h[n] * (cc + ss);
            } else {
                s += h[n] * cc + h[n_f + n] * ss;
            }
        }
        let mut tail = 0.0;
        let mut dtail_dbeta = 0.0;
        if self.family.is_extended() {
            let alpha = h[h.len() - 2];
            let beta = h[h.len() - 1];
            let cx = fa[0] * fb[0] + fa[1] * fb[1];
            let sx = fa[1] * fb[0] - fa[0] * fb[1];
            let (t, dt) = trig_tail_and_dbeta(beta, cx, sx);
            tail = t;
            dtail_dbeta = dt;
            s += alpha * tail;
        }
        let k = s / gamma_norm;

        if let Some(grad) = grad {
            grad[0] = h[0] * (1.0 - k) / gamma_norm;
            for n in 1..=n_f {
                let cc = fa[2 * n - 2] * fb[2 * n - 2];
                let ss = fa[2 * n - 1] * fb[2 * n - 1];
                if stationary {
                    grad[n] = h[n] * ((cc + ss) - k) / gamma_norm;
                } else {
                    grad[n] = h[n] * (cc - k * 0.5) / gamma_norm;
                    grad[n_f + n] = h[n_f + n] * (ss - k * 0.5) / gamma_norm;
                }
            }
            if self.family.is_extended() {
                let ia = h.len() - 2;
                let ib = h.len() - 1;
                grad[ia] = h[ia] * (tail - k) / gamma_norm;
                grad[ib] = h[ib] * h[ia] * dtail_dbeta / gamma_norm;
            }
        }
        k
    }
}

// ---------------------------------------------------------------------------
// Structured-text representation: family name, period, n_f, named
// hyperparameters. Field names are the config-file contract.
// ---------------------------------------------------------------------------

mod repr {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct LineKernelRepr {
        pub family: KernelFamily,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub period: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub n_f: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub l: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub gamma: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub delta: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub alpha: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub beta: Option<f64>,
    }

    impl TryFrom<LineKernelRepr> for LineKernelSpec {
        type Error = KernelError;

        fn try_from(r: LineKernelRepr) -> Result<Self, KernelError> {
            let fam = r.family;
            let reject_trig_keys = |r: &LineKernelRepr| -> Result<(), KernelError> {
                if r.gamma.is_some() || r.delta.is_some() || r.alpha.is_some() || r.beta.is_some() || r.n_f.is_some()
                {
                    return Err(KernelError::InvalidHyperparameter(format!(
                        "{} takes only `l` (and `period` for periodic_se)",
                        fam.label()
                    )));
                }
                Ok(())
            };
            let period = r.period.unwrap_or(TAU);
            match fam {
                KernelFamily::Se | KernelFamily::Matern32 | KernelFamily::Matern52 | KernelFamily::PeriodicSe => {
                    let l = r.l.ok_or_else(|| {
                        KernelError::InvalidHyperparameter(format!("{} requires `l`", fam.label()))
                    })?;
                    reject_trig_keys(&r)?;
                    LineKernelSpec::new(fam, period, 0, vec![l])
                }
                _ => {
                    if r.l.is_some() {
                        return Err(KernelError::InvalidHyperparameter(format!(
                            "{} does not take `l`",
                            fam.label()
                        )));
                    }
                    let gamma = r.gamma.ok_or_else(|| {
                        KernelError::InvalidHyperparameter(format!("{} requires `gamma`", fam.label()))
                    })?;
                    if gamma.is_empty() {
                        return Err(KernelError::InvalidHyperparameter("gamma must not be empty".into()));
                    }
                    let n_f = gamma.len() - 1;
                    if let Some(declared) = r.n_f {
                        if declared != n_f {
                            return Err(KernelError::InvalidHyperparameter(format!(
                                "n_f = {declared} but gamma has {} entries (needs n_f + 1)",
                                gamma.len()
                            )));
                        }
                    }
                    let stationary = fam.is_stationary();
                    let mut h = gamma;
                    match (stationary, r.delta) {
                        (true, Some(_)) => {
                            return Err(KernelError::InvalidHyperparameter(format!(
                                "{} is stationary and does not take `delta`",
                                fam.label()
                            )))
                        }
                        (true, None) => {}
                        (false, Some(delta)) => {
                            if delta.len() != n_f {
                                return Err(KernelError::InvalidHyperparameter(format!(
                                    "delta needs n_f = {n_f} entries, got {}",
                                    delta.len()
                                )));
                            }
                            h.extend(delta);
                        }
                        (false, None) => {
                            return Err(KernelError::InvalidHyperparameter(format!(
                                "{} requires `delta`",
                                fam.label()
                            )))
                        }
                    }
                    match (fam.is_extended(), r.alpha, r.beta) {
                        (true, Some(a), Some(b)) => {
                            h.push(a);
                            h.push(b);
                        }
                        (true, _, _) => {
                            return Err(KernelError::InvalidHyperparameter(format!(
                                "{} requires `alpha` and `beta`",
                                fam.label()
                            )))
                        }
                        (false, None, None) => {}
                        (false, _, _) => {
                            return Err(KernelError::InvalidHyperparameter(format!(
                                "{} does not take `alpha`/`beta`",
                                fam.label()
                            )))
                        }
                    }
                    LineKernelSpec::new(fam, period, n_f, h)
                }
            }
        }
    }

    impl From<LineKernelSpec> for LineKernelRepr {
        fn from(s: LineKernelSpec) -> LineKernelRepr {
            let fam = s.family;
            let n_f = s.freq_cutoff;
            let h = s.hyperparams;
            let mut r = LineKernelRepr {
                family: fam,
                period: Some(s.period),
                n_f: None,
                l: None,
                gamma: None,
                delta: None,
                alpha: None,
                beta: None,
            };
            match fam {
                KernelFamily::Se | KernelFamily::Matern32 | KernelFamily::Matern52 | KernelFamily::PeriodicSe => {
                    r.l = Some(h[0]);
                }
                KernelFamily::TrigNs | KernelFamily::TrigNsExt => {
                    r.n_f = Some(n_f);
                    r.gamma = Some(h[..=n_f].to_vec());
                    r.delta = Some(h[n_f + 1..2 * n_f + 1].to_vec());
                    if fam.is_extended() {
                        r.alpha = Some(h[2 * n_f + 1]);
                        r.beta = Some(h[2 * n_f + 2]);
                    }
                }
                KernelFamily::TrigS | KernelFamily::TrigSExt => {
                    r.n_f = Some(n_f);
                    r.gamma = Some(h[..=n_f].to_vec());
                    if fam.is_extended() {
                        r.alpha = Some(h[n_f + 1]);
                        r.beta = Some(h[n_f + 2]);
                    }
                }
            }
            r
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn se_closed_forms() {
        assert_eq!(k_se(1.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(k_se(1.0, 1.0).unwrap(), (-0.5f64).exp(), max_relative = 1e-15);
        // scale invariance ξ/l
        assert_relative_eq!(k_se(2.0, 2.0).unwrap(), k_se(1.0, 1.0).unwrap(), max_relative = 1e-15);
        assert!(k_se(0.0, 1.0).is_err());
        assert!(k_se(-1.0, 1.0).is_err());
    }

    #[test]
    fn matern_closed_forms() {
        assert_eq!(k_matern(MaternNu::ThreeHalves, 1.0, 0.0).unwrap(), 1.0);
        let r3 = 3.0f64.sqrt();
        assert_relative_eq!(
            k_matern(MaternNu::ThreeHalves, 1.0, 1.0).unwrap(),
            (1.0 + r3) * (-r3).exp(),
            max_relative = 1e-15
        );
        let r5 = 5.0f64.sqrt();
        assert_relative_eq!(
            k_matern(MaternNu::FiveHalves, 1.0, 1.0).unwrap(),
            (1.0 + r5 + 5.0 / 3.0) * (-r5).exp(),
            max_relative = 1e-15
        );
        // monotone decreasing in ξ
        let mut last = 1.0;
        for i in 1..50 {
            let v = k_matern(MaternNu::FiveHalves, 0.7, i as f64 * 0.1).unwrap();
            assert!(v < last && v > 0.0);
            last = v;
        }
    }

    #[test]
    fn pse_closed_forms() {
        assert_relative_eq!(k_pse(1.0, TAU, TAU).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(k_pse(1.0, TAU, PI).unwrap(), (-2.0f64).exp(), max_relative = 1e-12);
        // direct formula at (l=0.5, p=π, ξ=π/2)
        let expect = (-(1.0 / 0.5) * 1.0f64).exp(); // (1/(2·0.25))·(π/π·sin(π/2))² = 2·1
        assert_relative_eq!(k_pse(0.5, PI, PI / 2.0).unwrap(), expect, max_relative = 1e-12);
    }

    #[test]
    fn trig_ns_examples() {
        // n_f = 0: constant kernel after normalization
        let c = LineKernelSpec::trig_ns(TAU, &[3.7], &[]).unwrap();
        assert_relative_eq!(k_trig_ns(&c, 0.3, -2.0).unwrap(), 1.0, max_relative = 1e-15);

        // γ = δ reduces to cos(θ−θ')
        let k = LineKernelSpec::trig_ns(TAU, &[0.0, 1.0], &[1.0]).unwrap();
        for (a, b) in [(0.0, 1.0), (0.5, 2.5), (-1.0, 3.0)] {
            assert_relative_eq!(k_trig_ns(&k, a, b).unwrap(), (a - b as f64).cos(), epsilon = 1e-12);
        }

        // γ_1 = 1, δ_1 = 0: cosθ·cosθ'/Γ with Γ = 1/2
        let k = LineKernelSpec::trig_ns(TAU, &[0.0, 1.0], &[0.0]).unwrap();
        assert_relative_eq!(k_trig_ns(&k, 0.0, PI).unwrap(), -2.0, epsilon = 1e-12);
    }

    #[test]
    fn trig_s_examples() {
        let c = LineKernelSpec::trig_s(TAU, &[1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(k_trig_s(&c, 1.234).unwrap(), 1.0, max_relative = 1e-15);

        let k = LineKernelSpec::trig_s(TAU, &[0.0, 1.0]).unwrap();
        assert_relative_eq!(k_trig_s(&k, 0.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(k_trig_s(&k, PI).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn trig_period_rescaling() {
        // period π: lag π/2 maps to rescaled angle π.
        let k = LineKernelSpec::trig_s(PI, &[0.0, 1.0]).unwrap();
        assert_relative_eq!(k.eval(PI / 2.0, 0.0), -1.0, epsilon = 1e-12);
        assert_relative_eq!(k.eval(PI, 0.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ext_tail_values() {
        // at ξ = 0, β = ln 2: (2−1)/(2−1) = 1
        assert_relative_eq!(trig_tail(2.0f64.ln(), 0.0).unwrap(), 1.0, max_relative = 1e-15);
        assert!(trig_tail(0.0, 1.0).is_err());

        // tail equals the geometric series Σ e^{−βn} cos(nξ), normalized by its
        // value at 0 (= 1/(e^β − 1)).
        let beta = 1.0;
        for i in 0..40 {
            let xi = i as f64 * TAU / 40.0;
            let mut series = 0.0;
            for n in 1..=200 {
                series += (-beta * n as f64).exp() * (n as f64 * xi).cos();
            }
            let normalized = series * (beta.exp() - 1.0);
            assert!((trig_tail(beta, xi).unwrap() - normalized).abs() < 1e-10);
        }
    }

    #[test]
    fn ext_alpha_zero_matches_base() {
        let base = LineKernelSpec::trig_ns(TAU, &[0.5, 1.0, 0.3], &[0.8, 0.2]).unwrap();
        let ext = LineKernelSpec::trig_ns_ext(TAU, &[0.5, 1.0, 0.3], &[0.8, 0.2], 0.0, 1.5).unwrap();
        let mut x = 0.37;
        for i in 0..20 {
            let a = x;
            x = (x * 7.13 + i as f64).rem_euclid(TAU);
            let b = x;
            assert_relative_eq!(ext.eval(a, b), base.eval(a, b), epsilon = 1e-14);
        }
    }

    #[test]
    fn ext_beta_must_be_positive() {
        assert!(LineKernelSpec::trig_s_ext(TAU, &[1.0, 1.0], 0.5, 0.0).is_err());
        assert!(LineKernelSpec::trig_s_ext(TAU, &[1.0, 1.0], 0.5, 1.0).is_ok());
    }

    #[test]
    fn product_kernel_examples() {
        let c = LineKernelSpec::trig_ns(TAU, &[1.0], &[]).unwrap();
        let spec = ProductKernelSpec::new(2.5, vec![c.clone(), c.clone(), c]).unwrap();
        assert_relative_eq!(k_product(&spec, &[0.1, 0.2, 0.3], &[1.0, 2.0, 3.0]).unwrap(), 2.5);

        let se = LineKernelSpec::se(1.0).unwrap();
        let spec = ProductKernelSpec::new(1.0, vec![se.clone(), se.clone()]).unwrap();
        assert_relative_eq!(
            k_product(&spec, &[0.0, 0.0], &[1.0, 1.0]).unwrap(),
            (-1.0f64).exp(),
            max_relative = 1e-14
        );

        let single = ProductKernelSpec::new(1.0, vec![se.clone()]).unwrap();
        for i in 0..10 {
            let (a, b) = (0.13 * i as f64, 1.7 - 0.3 * i as f64);
            assert_eq!(k_product(&single, &[a], &[b]).unwrap(), se.eval(a, b));
        }

        assert!(k_product(&spec, &[0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn feature_path_matches_direct_eval() {
        let specs = [
            LineKernelSpec::se(0.7).unwrap(),
            LineKernelSpec::matern32(1.3).unwrap(),
            LineKernelSpec::matern52(0.4).unwrap(),
            LineKernelSpec::periodic_se(0.9, PI).unwrap(),
            LineKernelSpec::trig_ns(PI, &[0.2, 1.0, 0.5], &[0.7, 0.1]).unwrap(),
            LineKernelSpec::trig_s(TAU, &[0.2, 1.0, 0.5, 0.3, 0.1]).unwrap(),
            LineKernelSpec::trig_ns_ext(TAU, &[0.2, 1.0], &[0.7], 0.4, 0.8).unwrap(),
            LineKernelSpec::trig_s_ext(PI, &[0.2, 1.0, 0.5], 0.4, 2.0).unwrap(),
        ];
        for spec in &specs {
            let mut fa = vec![0.0; spec.feat_len()];
            let mut fb = vec![0.0; spec.feat_len()];
            let mut x = 0.21;
            for _ in 0..25 {
                let a = x * 9.7 % 8.0 - 4.0;
                let b = (x * 3.1 + 1.0) % 8.0 - 4.0;
                x = (x + 0.173) % 1.0;
                spec.write_features(a, &mut fa);
                spec.write_features(b, &mut fb);
                assert_relative_eq!(spec.eval_feat(&fa, &fb), spec.eval(a, b), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn log_param_round_trip() {
        let spec = ProductKernelSpec::new(
            2.0,
            vec![
                LineKernelSpec::trig_s(PI, &[0.2, 1.0, 0.5]).unwrap(),
                LineKernelSpec::se(0.7).unwrap(),
            ],
        )
        .unwrap();
        let logs = spec.to_log_params();
        assert_eq!(logs.len(), spec.hyper_count());
        let back = spec.from_log_params(&logs).unwrap();
        assert_relative_eq!(back.amplitude, 2.0, max_relative = 1e-12);
        assert_relative_eq!(back.lines[0].hyperparams()[1], 1.0, max_relative = 1e-12);
        assert_eq!(back.lines[1].family(), KernelFamily::Se);
    }

    #[test]
    fn serde_named_hyperparameters() {
        let spec = ProductKernelSpec::new(
            1.5,
            vec![
                LineKernelSpec::trig_ns_ext(TAU, &[0.2, 1.0], &[0.7], 0.4, 0.8).unwrap(),
                LineKernelSpec::se(0.7).unwrap(),
            ],
        )
        .unwrap();
        let text = toml::to_string(&spec).unwrap();
        assert!(text.contains("family = \"trig_ns_ext\""), "{text}");
        assert!(text.contains("gamma"), "{text}");
        let back: ProductKernelSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, spec);

        // unknown keys rejected
        let bad = "amplitude = 1.0\n[[lines]]\nfamily = \"se\"\nl = 1.0\nwavelength = 2.0\n";
        assert!(toml::from_str::<ProductKernelSpec>(bad).is_err());
        // mismatched layout rejected
        let bad = "amplitude = 1.0\n[[lines]]\nfamily = \"trig_s\"\ngamma = [1.0, 0.5]\ndelta = [0.1]\n";
        assert!(toml::from_str::<ProductKernelSpec>(bad).is_err());
    }
}
