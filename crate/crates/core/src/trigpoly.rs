//! Real trigonometric polynomials on a periodic line: exact interpolation
//! from equispaced samples and global minimization.
//!
//! A polynomial with cutoff n is f(θ) = a_0 + Σ_{k≤n} a_k cos(k·u) + b_k
//! sin(k·u), with u = (θ − θ_0)·2π/period. Sampling 2n+1 equispaced points
//! makes the discrete Fourier sums exact (the basis is orthogonal on the
//! grid), so interpolation never needs a linear solve.

use std::f64::consts::TAU;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct TrigPoly {
    pub theta0: f64,
    pub period: f64,
    pub a0: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Offsets of the 2n+1 equispaced sample points: θ_0 + m·period/(2n+1).
pub(crate) fn sample_offsets(period: f64, n: usize) -> Vec<f64> {
    let m = 2 * n + 1;
    (0..m).map(|i| i as f64 * period / m as f64).collect()
}

impl TrigPoly {
    /// Exact interpolation through `values[m] = f(θ_0 + m·period/(2n+1))`.
    pub fn interpolate(theta0: f64, period: f64, n: usize, values: &[f64]) -> TrigPoly {
        let m = 2 * n + 1;
        assert_eq!(values.len(), m, "need 2n+1 samples");
        let mf = m as f64;
        let a0 = values.iter().sum::<f64>() / mf;
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for k in 1..=n {
            let (mut ca, mut sa) = (0.0, 0.0);
            for (i, v) in values.iter().enumerate() {
                let u = TAU * (k * i) as f64 / mf;
                ca += v * u.cos();
                sa += v * u.sin();
            }
            a[k - 1] = 2.0 * ca / mf;
            b[k - 1] = 2.0 * sa / mf;
        }
        TrigPoly { theta0, period, a0, a, b }
    }

    pub fn cutoff(&self) -> usize {
        self.a.len()
    }

    fn u_of(&self, theta: f64) -> f64 {
        (theta - self.theta0) * TAU / self.period
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.eval_u(self.u_of(theta))
    }

    fn eval_u(&self, u: f64) -> f64 {
        let (c1, s1) = (u.cos(), u.sin());
        let (mut c, mut s) = (1.0, 0.0);
        let mut f = self.a0;
        for k in 0..self.a.len() {
            let (nc, ns) = (c * c1 - s * s1, s * c1 + c * s1);
            c = nc;
            s = ns;
            f += self.a[k] * c + self.b[k] * s;
        }
        f
    }

    /// Global minimum over one period: dense grid scan (ties keep the
    /// smallest angle) followed by golden-section refinement of the winning
    /// bracket. Returns (θ*, f(θ*)) with θ* the representative closest to
    /// θ_0 (in (θ_0 − period/2, θ_0 + period/2]).
    pub fn minimize(&self, grid: usize) -> (f64, f64) {
        let g = grid.max(4);
        let mut best_i = 0usize;
        let mut best_f = f64::INFINITY;
        for i in 0..g {
            let u = TAU * i as f64 / g as f64;
            let f = self.eval_u(u);
            if f < best_f {
                best_f = f;
                best_i = i;
            }
        }
        let h = TAU / g as f64;
        let center = TAU * best_i as f64 / g as f64;
        let (mut lo, mut hi) = (center - h, center + h);
        let phi = 0.5 * (5.0f64.sqrt() - 1.0);
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut f1 = self.eval_u(x1);
        let mut f2 = self.eval_u(x2);
        for _ in 0..70 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = self.eval_u(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = self.eval_u(x2);
            }
        }
        let mut u_star = 0.5 * (lo + hi);
        let mut f_star = self.eval_u(u_star);
        // ties go to the grid winner, which keeps constants at the anchor
        if best_f <= f_star {
            u_star = center;
            f_star = best_f;
        }
        // wrap to the representative nearest the anchor
        let mut u = u_star.rem_euclid(TAU);
        if u > std::f64::consts::PI {
            u -= TAU;
        }
        (self.theta0 + u * self.period / TAU, f_star)
    }
}
