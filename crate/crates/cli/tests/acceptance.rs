//! Numbered end-to-end acceptance checks, one printed verdict line each.
//!
//! `cargo test -p vqgp-cli --test acceptance` runs all ten. Passing criterion
//! numbers as arguments runs a subset (`-- 2 7`); non-numeric arguments are
//! ignored. The process exits nonzero if any selected check fails.

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use rand::Rng;
use vqgp_core::analysis::{
    self, draw_points, line_spectrum, measure_points, BenchmarkConfig, MetricKind,
    SamplingStrategy, StrategyKind,
};
use vqgp_core::gp::{self, FitOptions, FittedGp, TrainingSet};
use vqgp_core::kernels::{k_pse, k_se, trig_tail, KernelFamily, LineKernelSpec, ProductKernelSpec};
use vqgp_core::problems::{
    self, exact_cost, find_theta_best, maxcut_instance, random_regular_graph,
    separable_cosine_instance,
};
use vqgp_core::qsim::NoiseModel;
use vqgp_core::rng;
use vqgp_core::rotogp::{optimize, OptimizerConfig, OptimizerMode};

type Verdict = Result<String, String>;

fn main() {
    let selected: BTreeSet<usize> =
        std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let checks: Vec<(usize, &str, fn() -> Verdict)> = vec![
        (1, "gp posterior equals weight-space regression", c1_gp_vs_weight_space),
        (2, "kernel validity suite", c2_kernel_validity),
        (3, "noiseless trig interpolation is exact", c3_exact_interpolation),
        (4, "model quality improves with training size", c4_training_size_trend),
        (5, "non-gaussian noise breaks the more-data-helps rule", c5_noise_pathology),
        (6, "qaoa line spectra: flat mixer, decaying problem axes", c6_line_spectra),
        (7, "rotosolve solves separable cosines in one sweep", c7_rotosolve),
        (8, "rotogp beats rotosolve at a fixed shot budget", c8_optimizer_budget),
        (9, "bundled two-frequency instance end to end", c9_bundled_instance),
        (10, "cli reruns are byte-identical", c10_cli_determinism),
    ];
    let mut ran = 0usize;
    let mut failed = 0usize;
    for (id, name, check) in checks {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        ran += 1;
        let clock = Instant::now();
        let verdict = check();
        let secs = clock.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("criterion {id:2}  PASS  {secs:7.1}s  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:2}  FAIL  {secs:7.1}s  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {}/{} checks passed", ran - failed, ran);
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// shared numeric helpers (independent of the library's linear algebra)

fn median(mut v: Vec<f64>) -> f64 {
    assert!(!v.is_empty(), "median of empty set");
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Solve A·X = B by Gaussian elimination with partial pivoting.
/// B columns are given as rows of `rhs` (each of length n); returns the
/// solution columns in the same layout.
fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite matrix")
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        for r in &mut rhs {
            r.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            for r in &mut rhs {
                r[row] -= f * r[col];
            }
        }
    }
    for r in &mut rhs {
        for col in (0..n).rev() {
            let mut acc = r[col];
            for k in col + 1..n {
                acc -= a[col][k] * r[k];
            }
            r[col] = acc / a[col][col];
        }
    }
    Some(rhs)
}

/// Plain Cholesky attempt; true iff the matrix is numerically PSD.
fn cholesky_ok(a: &[Vec<f64>]) -> bool {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

/// Least-squares line through (x, y): returns (slope, r_squared).
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

// ---------------------------------------------------------------------------
// criterion 1: GP posterior == dense weight-space Bayesian regression

/// Fourier feature vector [1, cos u, sin u, ..., cos(n_f u), sin(n_f u)]
/// with the same internal rescaling the kernels use (one period -> 2π).
fn line_basis(theta: f64, period: f64, n_f: usize) -> Vec<f64> {
    let u = theta * TAU / period;
    let mut out = Vec::with_capacity(2 * n_f + 1);
    out.push(1.0);
    for n in 1..=n_f {
        out.push((n as f64 * u).cos());
        out.push((n as f64 * u).sin());
    }
    out
}

/// Diagonal prior weight variances in `line_basis` order, from the published
/// per-family weight layout and normalization (independent re-derivation;
/// never calls into the kernel code).
fn line_prior_diag(family: KernelFamily, hyper: &[f64], n_f: usize) -> Vec<f64> {
    match family {
        KernelFamily::TrigS => {
            let norm: f64 = hyper.iter().sum();
            let mut d = Vec::with_capacity(2 * n_f + 1);
            d.push(hyper[0] / norm);
            for n in 1..=n_f {
                d.push(hyper[n] / norm);
                d.push(hyper[n] / norm);
            }
            d
        }
        KernelFamily::TrigNs => {
            let gamma = &hyper[..=n_f];
            let delta = &hyper[n_f + 1..];
            let norm = gamma[0]
                + (1..=n_f).map(|n| (gamma[n] + delta[n - 1]) / 2.0).sum::<f64>();
            let mut d = Vec::with_capacity(2 * n_f + 1);
            d.push(gamma[0] / norm);
            for n in 1..=n_f {
                d.push(gamma[n] / norm);
                d.push(delta[n - 1] / norm);
            }
            d
        }
        other => panic!("no finite basis for {other:?}"),
    }
}

fn kron(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

fn c1_gp_vs_weight_space() -> Verdict {
    let mut worst = 0.0f64;
    for case in 0..50u64 {
        let mut r = rng::stream(0xACC0_0001, "acceptance.gp-blr", case);
        let dim = 1 + (case % 2) as usize;
        let mut lines = Vec::new();
        let mut families = Vec::new();
        let mut n_fs = Vec::new();
        let mut periods = Vec::new();
        for _ in 0..dim {
            let family =
                if r.random::<bool>() { KernelFamily::TrigS } else { KernelFamily::TrigNs };
            let n_f = r.random_range(1..=3usize);
            let period = if r.random::<bool>() { TAU } else { PI };
            let count = family.hyper_count(n_f);
            let hyper: Vec<f64> =
                (0..count).map(|_| r.random_range(-1.0..1.0f64).exp()).collect();
            lines.push(
                LineKernelSpec::new(family, period, n_f, hyper).map_err(|e| e.to_string())?,
            );
            families.push(family);
            n_fs.push(n_f);
            periods.push(period);
        }
        let amplitude = r.random_range(-0.7..0.7f64).exp();
        let spec = ProductKernelSpec::new(amplitude, lines.clone()).map_err(|e| e.to_string())?;

        let n = r.random_range(4..=12usize);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| periods.iter().map(|&p| r.random_range(0.0..p)).collect())
            .collect();
        let values: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
        let sigmas: Vec<f64> = (0..n).map(|_| r.random_range(0.05..0.5)).collect();
        let train =
            TrainingSet::new(&points, &values, &sigmas).map_err(|e| e.to_string())?;
        let gp = FittedGp::new(spec, train).map_err(|e| e.to_string())?;

        // weight-space route: diagonal Gaussian prior over Fourier weights
        let mut prior = vec![amplitude];
        for k in 0..dim {
            let hyper = lines[k].hyperparams();
            prior = kron(&prior, &line_prior_diag(families[k], hyper, n_fs[k]));
        }
        let m = prior.len();
        let phi_of = |theta: &[f64]| -> Vec<f64> {
            let mut phi = vec![1.0];
            for k in 0..dim {
                phi = kron(&phi, &line_basis(theta[k], periods[k], n_fs[k]));
            }
            phi
        };
        let mut s_inv = vec![vec![0.0; m]; m];
        for (i, row) in s_inv.iter_mut().enumerate() {
            row[i] = 1.0 / prior[i];
        }
        let mut rhs = vec![0.0; m];
        for i in 0..n {
            let phi = phi_of(&points[i]);
            let d = sigmas[i] * sigmas[i] + gp.jitter();
            for a in 0..m {
                for b in 0..m {
                    s_inv[a][b] += phi[a] * phi[b] / d;
                }
                rhs[a] += phi[a] * values[i] / d;
            }
        }

        let queries: Vec<Vec<f64>> = (0..5)
            .map(|_| periods.iter().map(|&p| r.random_range(0.0..p)).collect())
            .collect();
        let post = gp.posterior(&queries).map_err(|e| e.to_string())?;

        let mut systems = vec![rhs];
        for q in &queries {
            systems.push(phi_of(q));
        }
        let solved = solve_dense(s_inv, systems).ok_or("singular weight-space system")?;
        let weights = &solved[0];
        for (j, q) in queries.iter().enumerate() {
            let phi = phi_of(q);
            let mean: f64 = phi.iter().zip(weights).map(|(p, w)| p * w).sum();
            let var: f64 = phi.iter().zip(&solved[j + 1]).map(|(p, x)| p * x).sum();
            worst = worst.max(rel_err(mean, post.mean()[j]));
            worst = worst.max(rel_err(var, post.variance()[j]));
        }
    }
    if worst <= 1e-6 {
        Ok(format!("max relative error {worst:.2e} over 50 cases"))
    } else {
        Err(format!("relative error {worst:.2e} exceeds 1e-6"))
    }
}

// ---------------------------------------------------------------------------
// criterion 2: kernel validity suite

const ALL_FAMILIES: [KernelFamily; 8] = [
    KernelFamily::Se,
    KernelFamily::Matern32,
    KernelFamily::Matern52,
    KernelFamily::PeriodicSe,
    KernelFamily::TrigNs,
    KernelFamily::TrigS,
    KernelFamily::TrigNsExt,
    KernelFamily::TrigSExt,
];

fn random_line_spec<R: Rng + ?Sized>(family: KernelFamily, r: &mut R) -> LineKernelSpec {
    let n_f = if family.is_trig() { r.random_range(1..=4usize) } else { 0 };
    let period = if r.random::<bool>() { TAU } else { PI };
    let count = family.hyper_count(n_f);
    let mut hyper: Vec<f64> = (0..count).map(|_| r.random_range(-1.0..1.0f64).exp()).collect();
    if family.is_extended() {
        // keep the tail decay rate in a numerically tame band
        let last = hyper.len() - 1;
        hyper[last] = r.random_range(0.3..2.0);
    }
    LineKernelSpec::new(family, period, n_f, hyper).expect("valid random spec")
}

fn c2_kernel_validity() -> Verdict {
    let mut r = rng::stream(0xACC0_0002, "acceptance.kernel-validity", 0);

    // symmetry of the product kernel, every family
    for &family in &ALL_FAMILIES {
        for _ in 0..40 {
            let lines = vec![random_line_spec(family, &mut r), random_line_spec(family, &mut r)];
            let spec = ProductKernelSpec::new(r.random_range(0.2..3.0), lines)
                .map_err(|e| e.to_string())?;
            let a: Vec<f64> = (0..2).map(|_| r.random_range(-10.0..10.0)).collect();
            let b: Vec<f64> = (0..2).map(|_| r.random_range(-10.0..10.0)).collect();
            let (kab, kba) = (spec.eval(&a, &b), spec.eval(&b, &a));
            if (kab - kba).abs() > 1e-12 {
                return Err(format!("{family:?} asymmetric: |{kab} - {kba}| > 1e-12"));
            }
        }
    }

    // PSD with jitter: random grams stay factorizable
    for &family in &ALL_FAMILIES {
        for set in 0..2 {
            let lines = vec![random_line_spec(family, &mut r), random_line_spec(family, &mut r)];
            let spec = ProductKernelSpec::new(1.0, lines).map_err(|e| e.to_string())?;
            let pts: Vec<Vec<f64>> =
                (0..20).map(|_| (0..2).map(|_| r.random_range(-6.0..6.0)).collect()).collect();
            let mut k = vec![vec![0.0; 20]; 20];
            for i in 0..20 {
                for j in 0..20 {
                    k[i][j] = spec.eval(&pts[i], &pts[j]);
                }
                k[i][i] += 1e-8;
            }
            if !cholesky_ok(&k) {
                return Err(format!("{family:?} gram (set {set}) not PSD under 1e-8 jitter"));
            }
        }
    }

    // diagonal normalization: mean of k(θ, θ) over one period is exactly 1
    for &family in
        &[KernelFamily::TrigNs, KernelFamily::TrigS, KernelFamily::TrigNsExt, KernelFamily::TrigSExt]
    {
        for _ in 0..3 {
            let line = random_line_spec(family, &mut r);
            let period = line.period();
            let grid = 10_000;
            let avg: f64 = (0..grid)
                .map(|i| {
                    let t = i as f64 * period / grid as f64;
                    line.eval(t, t)
                })
                .sum::<f64>()
                / grid as f64;
            if (avg - 1.0).abs() > 1e-6 {
                return Err(format!("{family:?} diagonal period-average {avg} off by > 1e-6"));
            }
        }
    }

    // the stationary family is the non-stationary one at matched weights
    for _ in 0..40 {
        let n_f = r.random_range(1..=4usize);
        let period = if r.random::<bool>() { TAU } else { PI };
        let gamma: Vec<f64> = (0..=n_f).map(|_| r.random_range(-1.0..1.0f64).exp()).collect();
        let mut both = gamma.clone();
        both.extend_from_slice(&gamma[1..]);
        let s = LineKernelSpec::new(KernelFamily::TrigS, period, n_f, gamma)
            .map_err(|e| e.to_string())?;
        let ns = LineKernelSpec::new(KernelFamily::TrigNs, period, n_f, both)
            .map_err(|e| e.to_string())?;
        for _ in 0..5 {
            let (a, b) = (r.random_range(-9.0..9.0), r.random_range(-9.0..9.0));
            if (s.eval(a, b) - ns.eval(a, b)).abs() > 1e-12 {
                return Err(format!("stationary != matched non-stationary at ({a}, {b})"));
            }
        }
    }

    // closed-form frequency tail vs the defining series
    for &beta in &[0.5f64, 1.0, 2.0] {
        let scale = beta.exp() - 1.0;
        for i in 0..100 {
            let xi = i as f64 * TAU / 100.0;
            let series: f64 = scale
                * (1..=400).map(|n| (-beta * n as f64).exp() * (n as f64 * xi).cos()).sum::<f64>();
            let closed = trig_tail(beta, xi).map_err(|e| e.to_string())?;
            if (closed - series).abs() > 1e-10 {
                return Err(format!("tail(β={beta}, ξ={xi:.3}) off by {:.2e}", closed - series));
            }
        }
    }

    // periodic SE approaches plain SE for offsets far below the period
    for &l in &[0.5f64, 1.0] {
        for i in 1..=50 {
            let xi = i as f64 * (TAU / 100.0) / 50.0;
            let a = k_pse(l, TAU, xi).map_err(|e| e.to_string())?;
            let b = k_se(l, xi).map_err(|e| e.to_string())?;
            if (a - b).abs() > 1e-4 {
                return Err(format!("pSE vs SE at ξ={xi:.4}, l={l}: |Δ|={:.2e}", (a - b).abs()));
            }
        }
    }

    Ok("symmetry, PSD, normalization, family reductions, tail series, SE limit".into())
}

// ---------------------------------------------------------------------------
// criterion 3: noiseless interpolation of band-limited functions is exact

fn c3_exact_interpolation() -> Verdict {
    let mut worst = 0.0f64;
    for case in 0..10u64 {
        let mut r = rng::stream(0xACC0_0003, "acceptance.interp", case);
        let dim = 1 + (case % 2) as usize;
        let n_fs: Vec<usize> = (0..dim).map(|_| r.random_range(1..=3usize)).collect();
        let periods: Vec<f64> = (0..dim).map(|_| if r.random() { TAU } else { PI }).collect();

        // random band-limited target: three products of per-axis polynomials
        let mut terms: Vec<(f64, Vec<Vec<(f64, f64)>>)> = Vec::new();
        for _ in 0..3 {
            let weight = r.random_range(-1.0..1.0);
            let axes: Vec<Vec<(f64, f64)>> = (0..dim)
                .map(|k| {
                    (0..=n_fs[k])
                        .map(|_| (r.random_range(-1.0..1.0), r.random_range(0.0..TAU)))
                        .collect()
                })
                .collect();
            terms.push((weight, axes));
        }
        let f = |theta: &[f64]| -> f64 {
            terms
                .iter()
                .map(|(w, axes)| {
                    w * axes
                        .iter()
                        .enumerate()
                        .map(|(k, harmonics)| {
                            let u = theta[k] * TAU / periods[k];
                            harmonics
                                .iter()
                                .enumerate()
                                .map(|(n, (a, p))| a * (n as f64 * u + p).cos())
                                .sum::<f64>()
                        })
                        .product::<f64>()
                })
                .sum()
        };

        // training: product grid with 2 n_f + 1 equispaced angles per axis
        let offsets: Vec<f64> = (0..dim).map(|k| r.random_range(0.0..periods[k])).collect();
        let mut grid: Vec<Vec<f64>> = vec![Vec::new()];
        for k in 0..dim {
            let count = 2 * n_fs[k] + 1;
            let mut next = Vec::with_capacity(grid.len() * count);
            for point in &grid {
                for i in 0..count {
                    let mut p = point.clone();
                    p.push((offsets[k] + i as f64 * periods[k] / count as f64) % periods[k]);
                    next.push(p);
                }
            }
            grid = next;
        }
        let values: Vec<f64> = grid.iter().map(|p| f(p)).collect();
        let sigmas = vec![0.0; grid.len()];
        let train = TrainingSet::new(&grid, &values, &sigmas).map_err(|e| e.to_string())?;
        let spec = ProductKernelSpec::uniform(1.0, KernelFamily::TrigS, &periods, &n_fs)
            .map_err(|e| e.to_string())?;
        let gp = FittedGp::new(spec, train).map_err(|e| e.to_string())?;

        let queries: Vec<Vec<f64>> = (0..100)
            .map(|_| periods.iter().map(|&p| r.random_range(0.0..p)).collect())
            .collect();
        let mean = gp.predict_mean(&queries).map_err(|e| e.to_string())?;
        for (q, m) in queries.iter().zip(&mean) {
            worst = worst.max((f(q) - m).abs());
        }
    }
    if worst <= 1e-6 {
        Ok(format!("max |posterior mean - target| {worst:.2e} over 10 cases x 100 points"))
    } else {
        Err(format!("interpolation error {worst:.2e} exceeds 1e-6"))
    }
}

// ---------------------------------------------------------------------------
// criterion 4: minimum-location error shrinks as the training set grows

fn median_for(result: &analysis::BenchmarkResult, kernel: &str, n_t: usize) -> Result<f64, String> {
    result
        .medians
        .iter()
        .find(|m| m.kernel == kernel && m.n_t == n_t)
        .map(|m| m.median)
        .ok_or_else(|| format!("missing median row for {kernel} at N_T={n_t}"))
}

fn c4_training_size_trend() -> Verdict {
    let config = BenchmarkConfig {
        kernels: vec![KernelFamily::Se, KernelFamily::TrigS],
        strategies: vec![StrategyKind::LineNbhd { axis: 4, max_offset: 0.05 * PI }],
        n_t_grid: vec![10, 30, 60],
        trials: 20,
        shots: 20,
        noise: NoiseModel::Realistic,
        seed: 0xACC0_0004,
        vertices: 8,
        degree: 3,
        layers: 4,
        test_points: 16,
        theta_best_restarts: 16,
        fit: FitOptions::default(),
        metrics: vec![MetricKind::DMin],
    };
    let result = analysis::run_benchmark(&config).map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    for kernel in ["se", "trig_s"] {
        let m10 = median_for(&result, kernel, 10)?;
        let m30 = median_for(&result, kernel, 30)?;
        let m60 = median_for(&result, kernel, 60)?;
        detail.push(format!("{kernel}: {m10:.4} -> {m30:.4} -> {m60:.4}"));
        if !(m60 <= m30 && m30 <= m10 && m60 < m10) {
            return Err(format!(
                "median minimum-distance not decreasing for {kernel}: {m10:.4}, {m30:.4}, {m60:.4}"
            ));
        }
    }
    let trig10 = median_for(&result, "trig_s", 10)?;
    let se10 = median_for(&result, "se", 10)?;
    if trig10 > se10 {
        return Err(format!("trig_s at N_T=10 ({trig10:.4}) worse than se ({se10:.4})"));
    }
    Ok(detail.join("; "))
}

// ---------------------------------------------------------------------------
// criterion 5: with true shot noise, more data can hurt; Gaussianized cannot

fn c5_noise_pathology() -> Verdict {
    let base = BenchmarkConfig {
        kernels: vec![KernelFamily::TrigS],
        strategies: vec![StrategyKind::Hyperball { radius: 0.15 * PI }],
        n_t_grid: vec![30, 300, 2500],
        trials: 10,
        shots: 20,
        noise: NoiseModel::Realistic,
        seed: 0xACC0_0005,
        vertices: 8,
        degree: 3,
        layers: 4,
        test_points: 16,
        theta_best_restarts: 16,
        fit: FitOptions { restarts: 1, max_iters: 6, seed: 0, grad_tol: 1e-3 },
        metrics: vec![MetricKind::LMin],
    };
    let realistic = analysis::run_benchmark(&base).map_err(|e| e.to_string())?;
    let gaussianized = analysis::run_benchmark(&BenchmarkConfig {
        noise: NoiseModel::Gaussianized,
        ..base.clone()
    })
    .map_err(|e| e.to_string())?;

    let real: Vec<f64> = [30, 300, 2500]
        .iter()
        .map(|&n| median_for(&realistic, "trig_s", n))
        .collect::<Result<_, _>>()?;
    let gauss: Vec<f64> = [30, 300, 2500]
        .iter()
        .map(|&n| median_for(&gaussianized, "trig_s", n))
        .collect::<Result<_, _>>()?;

    if !(real[2] < real[0].max(real[1])) {
        return Err(format!(
            "realistic density at N_T=2500 ({:.3e}) is the grid maximum ({:.3e}, {:.3e})",
            real[2], real[0], real[1]
        ));
    }
    if !(gauss[0] <= gauss[1] && gauss[1] <= gauss[2]) {
        return Err(format!(
            "gaussianized density not non-decreasing: {:.3e}, {:.3e}, {:.3e}",
            gauss[0], gauss[1], gauss[2]
        ));
    }
    Ok(format!(
        "realistic {:.3e}, {:.3e}, {:.3e}; gaussianized {:.3e}, {:.3e}, {:.3e}",
        real[0], real[1], real[2], gauss[0], gauss[1], gauss[2]
    ))
}

// ---------------------------------------------------------------------------
// criterion 6: line spectra of QAOA cost functions

/// Pools per-axis spectra over fresh random-regular instances; returns the
/// mixer-axis harmonic ratio median and the problem-axis decay fit.
fn spectra_stats(vertices: usize, instances: u64, tag: u64) -> Result<(f64, f64, f64, usize), String> {
    let mut ratios = Vec::new();
    let mut by_harmonic: Vec<Vec<f64>> = vec![Vec::new(); 33];
    for i in 0..instances {
        let idx = tag * 1000 + i;
        let graph = random_regular_graph(
            vertices,
            3,
            &mut rng::stream(0xACC0_0006, "acceptance.spectra.graph", idx),
        )
        .map_err(|e| e.to_string())?;
        let inst = maxcut_instance(&graph, 4).map_err(|e| e.to_string())?;
        let mut cr = rng::stream(0xACC0_0006, "acceptance.spectra.center", idx);
        let center: Vec<f64> =
            inst.periods.iter().map(|&p| cr.random_range(0.0..p)).collect();
        for axis in 0..inst.dim() {
            let spec = line_spectrum(&inst, &center, axis, 64).map_err(|e| e.to_string())?;
            if axis % 2 == 1 {
                ratios.push(spec.magnitude(1) / spec.magnitude(2).max(1e-300));
            } else {
                for (n, mags) in by_harmonic.iter_mut().enumerate().skip(1) {
                    mags.push(spec.magnitude(n));
                }
            }
        }
    }
    let ratio_median = median(ratios);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n in 5..=32usize {
        let med = median(by_harmonic[n].clone());
        if med > 1e-10 {
            xs.push(n as f64);
            ys.push(med.ln());
        }
    }
    if xs.len() < 3 {
        return Err(format!("only {} usable harmonics above the floor", xs.len()));
    }
    let (slope, r2) = linear_fit(&xs, &ys);
    Ok((ratio_median, slope, r2, xs.len()))
}

fn c6_line_spectra() -> Verdict {
    let mut detail = Vec::new();
    for (vertices, instances, tag) in [(8usize, 20u64, 0u64), (10, 5, 1), (12, 5, 2)] {
        let (ratio, slope, r2, used) = spectra_stats(vertices, instances, tag)?;
        detail.push(format!(
            "n={vertices}: mixer |c1|/|c2| median {ratio:.1e}, problem-axis slope {slope:.2} (R²={r2:.3}, {used} harmonics)"
        ));
        if ratio <= 10.0 {
            return Err(format!("n={vertices}: mixer harmonic ratio median {ratio:.2} <= 10"));
        }
        if !(slope < 0.0 && r2 > 0.9) {
            return Err(format!(
                "n={vertices}: problem-axis decay fit slope {slope:.3}, R²={r2:.3} fails"
            ));
        }
    }
    Ok(detail.join("; "))
}

// ---------------------------------------------------------------------------
// criterion 7: RotoSolve on exactly band-limited lines

fn c7_rotosolve() -> Verdict {
    // one sweep solves a separable cosine sum exactly
    let inst = separable_cosine_instance(6);
    let mut cfg = OptimizerConfig::new(
        OptimizerMode::RotoSolve,
        inst.n_f.clone(),
        inst.periods.clone(),
    );
    cfg.noise = NoiseModel::Exact;
    cfg.shots = 1;
    cfg.max_sweeps = 1;
    cfg.seed = 0xACC0_0007;
    let traj = optimize(&inst, &cfg).map_err(|e| e.to_string())?;
    let final_cost = exact_cost(&inst, &traj.theta_final).map_err(|e| e.to_string())?;
    if (final_cost + 6.0).abs() > 1e-8 {
        return Err(format!("one sweep reached {final_cost}, expected -6 within 1e-8"));
    }

    // with the line bandwidth fully modeled every exact step is non-increasing
    let graph = random_regular_graph(4, 3, &mut rng::stream(0xACC0_0007, "acceptance.k4", 0))
        .map_err(|e| e.to_string())?;
    let k4 = maxcut_instance(&graph, 1).map_err(|e| e.to_string())?;
    let mut cfg = OptimizerConfig::new(OptimizerMode::RotoSolve, vec![6, 4], k4.periods.clone());
    cfg.noise = NoiseModel::Exact;
    cfg.shots = 1;
    cfg.max_sweeps = 6;
    cfg.seed = 0xACC0_0007;
    let traj = optimize(&k4, &cfg).map_err(|e| e.to_string())?;
    for pair in traj.entries.windows(2) {
        if pair[1].exact_cost > pair[0].exact_cost + 1e-9 {
            return Err(format!(
                "exact-noise step raised the cost: {} -> {} at step {}",
                pair[0].exact_cost, pair[1].exact_cost, pair[1].step
            ));
        }
    }
    Ok(format!("separable final cost {final_cost:.10}; K4 sweep monotone over {} steps", traj.entries.len() - 1))
}

// ---------------------------------------------------------------------------
// criterion 8: optimizer comparison at a fixed measurement budget

fn c8_optimizer_budget() -> Verdict {
    const SEEDS: u64 = 20;
    const BUDGET: u64 = 1_000_000;
    let mut one_minus_r = vec![Vec::new(), Vec::new(), Vec::new()];
    for seed in 0..SEEDS {
        let graph = random_regular_graph(
            8,
            3,
            &mut rng::stream(0xACC0_0008, "acceptance.budget.graph", seed),
        )
        .map_err(|e| e.to_string())?;
        let inst = maxcut_instance(&graph, 4).map_err(|e| e.to_string())?;
        let (theta_best, _) = find_theta_best(
            &inst,
            16,
            rng::subseed(0xACC0_0008, "acceptance.budget.best", seed),
        )
        .map_err(|e| e.to_string())?;
        let modes = [
            OptimizerMode::RotoSolve,
            OptimizerMode::RotoGp { kernel: KernelFamily::TrigS },
            OptimizerMode::RotoGp { kernel: KernelFamily::Se },
        ];
        for (slot, mode) in modes.into_iter().enumerate() {
            let mut cfg =
                OptimizerConfig::new(mode, inst.n_f.clone(), inst.periods.clone());
            cfg.shots = 100;
            cfg.max_sweeps = usize::MAX;
            cfg.subset_cap = 200;
            cfg.seed = rng::subseed(0xACC0_0008, "acceptance.budget.run", seed);
            cfg.noise = NoiseModel::Realistic;
            cfg.max_shots = Some(BUDGET);
            cfg.fit = FitOptions { restarts: 1, max_iters: 2, seed: 0, grad_tol: 5e-3 };
            let traj = optimize(&inst, &cfg).map_err(|e| e.to_string())?;
            let r = problems::approximation_ratio(&inst, &traj.theta_final, &theta_best)
                .map_err(|e| e.to_string())?;
            one_minus_r[slot].push(1.0 - r);
        }
    }
    let solve = median(one_minus_r[0].clone());
    let trig = median(one_minus_r[1].clone());
    let se = median(one_minus_r[2].clone());
    let detail = format!(
        "median 1-r over {SEEDS} seeds: rotosolve {solve:.4}, rotogp-trig_s {trig:.4}, rotogp-se {se:.4}"
    );
    if trig <= solve {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// criterion 9: bundled synthetic instance exercises ingestion end to end

fn asset_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets/two-frequency-6q")
}

fn c9_bundled_instance() -> Verdict {
    let inst = problems::io::load_instance_dir(&asset_dir()).map_err(|e| e.to_string())?;
    if inst.dim() != 6 || inst.n_f != vec![2; 6] {
        return Err(format!("unexpected metadata: dim {}, n_f {:?}", inst.dim(), inst.n_f));
    }
    if inst.periods.iter().any(|&p| (p - TAU).abs() > 1e-12) {
        return Err(format!("periods {:?} are not 2π", inst.periods));
    }

    // every line carries exactly frequencies {1, 2}
    let mut r = rng::stream(0xACC0_0009, "acceptance.bundle", 0);
    let center: Vec<f64> = inst.periods.iter().map(|&p| r.random_range(0.0..p)).collect();
    let mut strongest = 0.0f64;
    for axis in 0..6 {
        let spec = line_spectrum(&inst, &center, axis, 32).map_err(|e| e.to_string())?;
        let low = spec.magnitude(1).max(spec.magnitude(2));
        strongest = strongest.max(low);
        if low < 1e-3 {
            return Err(format!("axis {axis}: no signal in harmonics 1-2 (max {low:.2e})"));
        }
        for n in 3..=16 {
            if spec.magnitude(n) > 1e-8 {
                return Err(format!(
                    "axis {axis}: harmonic {n} magnitude {:.2e} breaks the two-frequency shape",
                    spec.magnitude(n)
                ));
            }
        }
    }

    // noiseless samples on one line interpolate exactly with n_f = 2
    let mut worst = 0.0f64;
    let line_points = |positions: &[f64]| -> Vec<Vec<f64>> {
        positions
            .iter()
            .map(|&t| {
                let mut p = center.clone();
                p[0] = t;
                p
            })
            .collect()
    };
    let anchors: Vec<f64> = (0..5).map(|i| (center[0] + i as f64 * TAU / 5.0) % TAU).collect();
    let train_pts = line_points(&anchors);
    let values: Result<Vec<f64>, _> = train_pts.iter().map(|p| exact_cost(&inst, p)).collect();
    let values = values.map_err(|e| e.to_string())?;
    let train = TrainingSet::new(&train_pts, &values, &vec![0.0; 5]).map_err(|e| e.to_string())?;
    let spec = ProductKernelSpec::uniform(1.0, KernelFamily::TrigS, &inst.periods, &inst.n_f)
        .map_err(|e| e.to_string())?;
    let gp = FittedGp::new(spec, train).map_err(|e| e.to_string())?;
    let dense: Vec<f64> = (0..100).map(|i| i as f64 * TAU / 100.0).collect();
    let dense_pts = line_points(&dense);
    let mean = gp.predict_mean(&dense_pts).map_err(|e| e.to_string())?;
    for (p, m) in dense_pts.iter().zip(&mean) {
        let target = exact_cost(&inst, p).map_err(|e| e.to_string())?;
        worst = worst.max((target - m).abs());
    }
    if worst > 1e-6 {
        return Err(format!("line interpolation error {worst:.2e} exceeds 1e-6"));
    }

    // model-quality pipeline end to end on the loaded instance
    let strategy = SamplingStrategy::new(
        StrategyKind::LineNbhd { axis: 0, max_offset: 0.05 * PI },
        center.clone(),
    )
    .map_err(|e| e.to_string())?;
    let points = draw_points(
        &strategy,
        30,
        &inst.periods,
        &mut rng::stream(0xACC0_0009, "acceptance.bundle.points", 0),
    )
    .map_err(|e| e.to_string())?;
    let train = measure_points(
        &inst,
        &points,
        20,
        NoiseModel::Realistic,
        &mut rng::stream(0xACC0_0009, "acceptance.bundle.measure", 0),
    )
    .map_err(|e| e.to_string())?;
    let template = ProductKernelSpec::uniform(1.0, KernelFamily::TrigS, &inst.periods, &inst.n_f)
        .map_err(|e| e.to_string())?;
    let report = gp::optimize_hyperparameters(
        &template,
        &train,
        &FitOptions { restarts: 2, max_iters: 40, seed: 0, grad_tol: 1e-4 },
    )
    .map_err(|e| e.to_string())?;
    let gp = FittedGp::new(report.spec, train).map_err(|e| e.to_string())?;
    let (theta_min, y_min) =
        analysis::exact_extremum_in_subspace(&inst, &strategy, &center, false)
            .map_err(|e| e.to_string())?;
    let (_, y_max) = analysis::exact_extremum_in_subspace(&inst, &strategy, &center, true)
        .map_err(|e| e.to_string())?;
    let theta_gpm = analysis::gpm_minimum_search(&gp, &strategy, &inst.periods, &center)
        .map_err(|e| e.to_string())?;
    let d_min = analysis::metric_d_min(&theta_min, &theta_gpm, &inst.periods);
    let l_min = analysis::metric_l_min(&gp, &theta_min, y_min).map_err(|e| e.to_string())?;
    let y_gpm = gp.predict_mean(std::slice::from_ref(&theta_min)).map_err(|e| e.to_string())?;
    let delta = analysis::metric_delta_min(y_gpm[0], y_min, y_max).map_err(|e| e.to_string())?;
    if !(d_min.is_finite() && l_min.is_finite() && l_min > 0.0 && delta.is_finite()) {
        return Err(format!("degenerate metrics: d_min {d_min}, L_min {l_min}, δ_min {delta}"));
    }
    Ok(format!(
        "spectra two-frequency (strongest {strongest:.3}), interpolation {worst:.1e}, metrics d_min {d_min:.3} L_min {l_min:.2} δ_min {delta:.3}"
    ))
}

// ---------------------------------------------------------------------------
// criterion 10: CLI determinism

fn vqgp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vqgp"))
        .args(args)
        .env_remove("VQGP_WORKERS")
        .output()
        .expect("binary runs")
}

/// Every file matching `names` must exist in both trees with identical bytes.
fn compare_outputs(a: &Path, b: &Path, names: &[&str]) -> Result<usize, String> {
    let mut compared = 0;
    for name in names {
        let fa = fs::read(a.join(name)).map_err(|e| format!("{}/{name}: {e}", a.display()))?;
        let fb = fs::read(b.join(name)).map_err(|e| format!("{}/{name}: {e}", b.display()))?;
        if fa != fb {
            return Err(format!("{name} differs between reruns"));
        }
        compared += 1;
    }
    Ok(compared)
}

fn c10_cli_determinism() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let mut compared = 0usize;

    let run_twice = |command: &str, body: &dyn Fn(&Path) -> String| -> Result<(PathBuf, PathBuf), String> {
        let mut dirs = Vec::new();
        for side in ["a", "b"] {
            let out = root.join(format!("{command}-{side}"));
            let cfg_path = root.join(format!("{command}-{side}.toml"));
            fs::write(&cfg_path, body(&out)).map_err(|e| e.to_string())?;
            let out_cmd = vqgp(&[command, "--config", cfg_path.to_str().unwrap()]);
            if !out_cmd.status.success() {
                return Err(format!(
                    "{command} failed: {}",
                    String::from_utf8_lossy(&out_cmd.stderr)
                ));
            }
            dirs.push(out);
        }
        Ok((dirs.remove(0), dirs.remove(0)))
    };

    let (mk_a, mk_b) = run_twice("make-instance", &|out| {
        format!(
            "version = 1\ncommand = \"make-instance\"\nseed = 7\nout = \"{}\"\n\n[instance]\nkind = \"two_frequency\"\n",
            out.display()
        )
    })?;
    compared += compare_outputs(
        &mk_a,
        &mk_b,
        &["instance/hamiltonian.txt", "instance/circuit.txt", "instance/metadata.toml"],
    )?;

    let (sp_a, sp_b) = run_twice("spectrum", &|out| {
        format!(
            "version = 1\ncommand = \"spectrum\"\nseed = 11\nout = \"{}\"\ntheta_best_restarts = 2\n\n[instance]\nkind = \"separable\"\nqubits = 3\n\n[spectrum]\ninstances = 2\ngrid = 16\n",
            out.display()
        )
    })?;
    compared += compare_outputs(&sp_a, &sp_b, &["spectrum.csv"])?;

    let (bm_a, bm_b) = run_twice("benchmark", &|out| {
        format!(
            "version = 1\ncommand = \"benchmark\"\nseed = 5\nout = \"{}\"\nn_t_grid = [6]\ntrials = 2\nshots = 20\ntheta_best_restarts = 2\nmetrics = [\"d_min\"]\n\n[instance]\nkind = \"maxcut\"\nvertices = 4\ndegree = 3\nlayers = 1\n\n[[kernels]]\nfamily = \"se\"\n\n[[strategies]]\nkind = \"line_nbhd\"\naxis = 0\nmax_offset = 0.1\n\n[fit]\nrestarts = 2\nmax_iters = 15\n",
            out.display()
        )
    })?;
    compared += compare_outputs(&bm_a, &bm_b, &["records.csv"])?;

    let mk_bundle = mk_a.join("instance");
    let (ft_a, ft_b) = run_twice("fit", &|out| {
        format!(
            "version = 1\ncommand = \"fit\"\nseed = 3\nout = \"{}\"\nn_t_grid = [8]\ntrials = 1\nshots = 50\ntheta_best_restarts = 2\n\n[instance]\nkind = \"load\"\npath = \"{}\"\n\n[[kernels]]\nfamily = \"trig_s\"\nn_f = [2, 2, 2, 2, 2, 2]\n\n[[strategies]]\nkind = \"line_nbhd\"\naxis = 0\nmax_offset = 0.2\n\n[fit]\nrestarts = 2\nmax_iters = 10\n",
            out.display(),
            mk_bundle.display()
        )
    })?;
    compared += compare_outputs(&ft_a, &ft_b, &["fits.csv"])?;

    let (op_a, op_b) = run_twice("optimize", &|out| {
        format!(
            "version = 1\ncommand = \"optimize\"\nseed = 9\nout = \"{}\"\nshots = 40\n\n[instance]\nkind = \"separable\"\nqubits = 2\n\n[optimize]\nruns = 2\nsweeps = 2\n",
            out.display()
        )
    })?;
    compared += compare_outputs(&op_a, &op_b, &["run_000.csv", "run_001.csv", "curve.csv"])?;

    Ok(format!("5 commands, {compared} output files byte-identical across reruns"))
}
