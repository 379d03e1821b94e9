//! Fit every configured kernel to training sets drawn around the instance
//! optimum, one set per training size; report likelihoods and fitted specs.

use super::{realize, theta_best_of, write_json, write_text, Outcome};
use crate::config::{ConfigError, ExperimentConfig};
use anyhow::Result;
use serde::Serialize;
use vqgp_core::analysis::{draw_training_set, SamplingStrategy};
use vqgp_core::gp::optimize_hyperparameters;
use vqgp_core::kernels::ProductKernelSpec;
use vqgp_core::rng;

#[derive(Serialize)]
struct FitEntry {
    kernel: &'static str,
    n_t: usize,
    log_marginal: f64,
    winner: usize,
    iterations: usize,
    spec: ProductKernelSpec,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let realized = realize(cfg, cfg.seed, "cli.fit.graph", 0, None)?;
    let inst = &realized.instance;
    let dim = inst.dim();
    let (tb, _) = theta_best_of(
        inst,
        cfg.theta_best_restarts,
        rng::subseed(cfg.seed, "cli.fit.best", 0),
    )?;
    let strategy = SamplingStrategy::new(cfg.strategies[0].clone(), tb)?;

    let mut csv = String::from("kernel,n_t,log_marginal,winner,iterations\n");
    let mut entries = Vec::new();
    for (ti, &n_t) in cfg.n_t_grid.iter().enumerate() {
        let mut rng = rng::stream(cfg.seed, "cli.fit.train", ti as u64);
        let train = draw_training_set(&strategy, n_t, inst, cfg.shots(), cfg.noise, &mut rng)?;
        for (ki, k) in cfg.kernels.iter().enumerate() {
            let n_f = k.n_f.clone().unwrap_or_else(|| inst.n_f.clone());
            if n_f.len() != dim {
                return Err(ConfigError(format!(
                    "kernels[{ki}].n_f: {} entries but the instance has {dim} parameters",
                    n_f.len()
                ))
                .into());
            }
            let template = ProductKernelSpec::uniform(k.amplitude, k.family, &inst.periods, &n_f)?;
            let opts = cfg
                .fit
                .to_options(rng::subseed(cfg.seed, "cli.fit.opt", (ti * 64 + ki) as u64));
            let report = optimize_hyperparameters(&template, &train, &opts)?;
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                k.family.label(),
                n_t,
                report.log_marginal,
                report.winner,
                report.iterations
            ));
            entries.push(FitEntry {
                kernel: k.family.label(),
                n_t,
                log_marginal: report.log_marginal,
                winner: report.winner,
                iterations: report.iterations,
                spec: report.spec,
            });
        }
    }
    write_text(&cfg.out.join("fits.csv"), &csv)?;
    write_json(&cfg.out.join("fits.json"), &entries)?;
    Ok(Outcome::Clean)
}
