//! Thin wrapper over the dense linear-algebra backend.
//!
//! Everything here runs sequentially (the backend is built without threading),
//! so repeated factorizations of the same matrix are bitwise reproducible.

use faer::linalg::solvers::{DenseSolveCore, Llt, Solve, SolveLstsq};
use faer::{Mat, Side};

/// Symmetric positive-definite factorization (Cholesky).
pub(crate) struct Spd {
    llt: Llt<f64>,
    log_det: f64,
    n: usize,
}

impl Spd {
    /// Factor `a` (square, row-major). `None` when not positive definite.
    pub fn factor(a: &Mat<f64>) -> Option<Spd> {
        let n = a.nrows();
        let llt = a.llt(Side::Lower).ok()?;
        let mut log_det = 0.0;
        for i in 0..n {
            let d = llt.L()[(i, i)];
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            log_det += d.ln();
        }
        Some(Spd { llt, log_det: 2.0 * log_det, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// log det of the factored matrix.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.llt.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    pub fn solve_mat(&self, b: &Mat<f64>) -> Mat<f64> {
        assert_eq!(b.nrows(), self.n);
        self.llt.solve(b)
    }

    pub fn inverse(&self) -> Mat<f64> {
        self.llt.inverse()
    }

    /// L·z for the lower Cholesky factor (draws correlated samples from
    /// white noise z).
    pub fn mul_lower(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.n);
        let l = self.llt.L();
        (0..self.n).map(|i| (0..=i).map(|j| l[(i, j)] * z[j]).sum()).collect()
    }
}

/// Least-squares solution of `a x = b` (rows ≥ cols). `None` when the system
/// is numerically singular (non-finite solution or residual far above the
/// data scale for a square system).
pub(crate) fn solve_lstsq(a: &Mat<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let (m, nc) = (a.nrows(), a.ncols());
    assert_eq!(b.len(), m);
    if m < nc {
        return None;
    }
    let rhs = Mat::from_fn(m, 1, |i, _| b[i]);
    let qr = a.col_piv_qr();
    let x = qr.solve_lstsq(&rhs);
    let sol: Vec<f64> = (0..nc).map(|i| x[(i, 0)]).collect();
    if !sol.iter().all(|v| v.is_finite()) {
        return None;
    }
    if m == nc {
        // Square systems are interpolations here; a singular matrix shows up
        // as a wild residual rather than an error from QR.
        let scale = b.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..nc {
                acc += a[(i, j)] * sol[j];
            }
            worst = worst.max((acc - b[i]).abs());
        }
        if worst > 1e-6 * scale {
            return None;
        }
    }
    Some(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_solve_and_log_det() {
        // A = [[4, 2], [2, 3]]: det = 8, A^{-1}[0] = [3/8, -1/4].
        let a = Mat::from_fn(2, 2, |i, j| [[4.0, 2.0], [2.0, 3.0]][i][j]);
        let f = Spd::factor(&a).unwrap();
        assert!((f.log_det() - 8.0f64.ln()).abs() < 1e-12);
        let x = f.solve_vec(&[1.0, 0.0]);
        assert!((x[0] - 0.375).abs() < 1e-12 && (x[1] + 0.25).abs() < 1e-12);
        let inv = f.inverse();
        assert!((inv[(0, 0)] - 0.375).abs() < 1e-12);
    }

    #[test]
    fn non_spd_is_rejected() {
        let a = Mat::from_fn(2, 2, |i, j| if i == j { -1.0 } else { 0.0 });
        assert!(Spd::factor(&a).is_none());
    }

    #[test]
    fn lstsq_square_and_overdetermined() {
        let a = Mat::from_fn(2, 2, |i, j| [[1.0, 1.0], [1.0, -1.0]][i][j]);
        let x = solve_lstsq(&a, &[3.0, 1.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);

        // y = 2t + 1 sampled at t = 0, 1, 2 fits exactly.
        let t = [0.0, 1.0, 2.0];
        let a = Mat::from_fn(3, 2, |i, j| if j == 0 { 1.0 } else { t[i] });
        let x = solve_lstsq(&a, &[1.0, 3.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-10 && (x[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn lstsq_rejects_singular_square() {
        let a = Mat::from_fn(2, 2, |_, _| 1.0);
        assert!(solve_lstsq(&a, &[1.0, 2.0]).is_none());
    }
}
