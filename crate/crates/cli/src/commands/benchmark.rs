//! Model-quality benchmark: delegates to the core grid runner and writes
//! plot-ready records plus a median summary.

use super::{write_json, write_text, Outcome};
use crate::config::ExperimentConfig;
use anyhow::{bail, Result};
use vqgp_core::analysis::{run_benchmark, BenchmarkConfig, MetricKind, MetricRecord};

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let i = &cfg.instance;
    let bc = BenchmarkConfig {
        kernels: cfg.kernels.iter().map(|k| k.family).collect(),
        strategies: cfg.strategies.clone(),
        n_t_grid: cfg.n_t_grid.clone(),
        trials: cfg.trials,
        shots: cfg.shots(),
        noise: cfg.noise,
        seed: cfg.seed,
        vertices: i.vertices.expect("validated"),
        degree: i.degree.expect("validated"),
        layers: i.layers.expect("validated"),
        test_points: cfg.test_points,
        theta_best_restarts: cfg.theta_best_restarts,
        fit: cfg.fit.to_options(0),
        metrics: cfg.metrics.clone().unwrap_or_else(|| MetricKind::ALL.to_vec()),
    };
    let result = run_benchmark(&bc)?;

    let mut csv = String::from(MetricRecord::CSV_HEADER);
    csv.push('\n');
    for r in &result.records {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    write_text(&cfg.out.join("records.csv"), &csv)?;
    write_json(&cfg.out.join("medians.json"), &result.medians)?;

    let failed = result.records.iter().filter(|r| r.failed).count();
    if failed == result.records.len() && failed > 0 {
        bail!("every benchmark cell failed");
    }
    if failed > 0 {
        return Ok(Outcome::Partial(failed));
    }
    Ok(Outcome::Clean)
}
