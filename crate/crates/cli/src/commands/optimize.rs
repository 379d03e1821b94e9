//! Optimization runs: one trajectory CSV per seed plus an aggregate curve of
//! cost, gap to the ground energy, and 1 − r against cumulative shots.

use super::{realize, theta_best_of, write_text, Outcome};
use crate::config::{ExperimentConfig, InstanceKind, OptimizerKind};
use anyhow::Result;
use rayon::prelude::*;
use vqgp_core::problems::brute_force_optimum;
use vqgp_core::rng;
use vqgp_core::rotogp::{optimize, OptimizerConfig, OptimizerMode, Trajectory};
use vqgp_core::stats;

struct RunOut {
    trajectory: Trajectory,
    dim: usize,
    /// Ground energy of the cost Hamiltonian, when known.
    e_gs: Option<f64>,
    /// Circuit-best cut value F(θ_best) and the coefficient norm (MaxCut).
    ratio_ref: Option<(f64, f64)>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let o = &cfg.optimize;
    let runs: Vec<RunOut> = (0..o.runs)
        .into_par_iter()
        .map(|run| single_run(cfg, run as u64))
        .collect::<Result<_>>()?;

    for (i, r) in runs.iter().enumerate() {
        let mut csv = Trajectory::csv_header(r.dim);
        csv.push('\n');
        for e in &r.trajectory.entries {
            csv.push_str(&Trajectory::csv_row(e));
            csv.push('\n');
        }
        write_text(&cfg.out.join(format!("run_{i:03}.csv")), &csv)?;
    }

    let len = runs.iter().map(|r| r.trajectory.entries.len()).min().unwrap_or(0);
    let mut csv = String::from(
        "s_tot,mean_cost,median_cost,mean_gap,median_gap,mean_one_minus_r,median_one_minus_r\n",
    );
    for e in 0..len {
        let s_tot = runs[0].trajectory.entries[e].s_tot;
        let costs: Vec<f64> =
            runs.iter().map(|r| r.trajectory.entries[e].exact_cost).collect();
        let gaps: Vec<f64> = runs
            .iter()
            .map(|r| match r.e_gs {
                Some(gs) => r.trajectory.entries[e].exact_cost - gs,
                None => f64::NAN,
            })
            .collect();
        let deficits: Vec<f64> = runs
            .iter()
            .map(|r| match r.ratio_ref {
                Some((f_best, w)) => {
                    1.0 - (w - r.trajectory.entries[e].exact_cost) / 2.0 / f_best
                }
                None => f64::NAN,
            })
            .collect();
        csv.push_str(&format!(
            "{s_tot},{},{},{},{},{},{}\n",
            stats::mean(&costs),
            stats::median(&costs),
            stats::mean(&gaps),
            stats::median(&gaps),
            stats::mean(&deficits),
            stats::median(&deficits),
        ));
    }
    write_text(&cfg.out.join("curve.csv"), &csv)?;
    Ok(Outcome::Clean)
}

fn single_run(cfg: &ExperimentConfig, run: u64) -> Result<RunOut> {
    let o = &cfg.optimize;
    let realized = realize(cfg, cfg.seed, "cli.optimize.graph", run, None)?;
    let inst = &realized.instance;

    let (e_gs, ratio_ref) = match cfg.instance.kind {
        InstanceKind::Maxcut => {
            let g = realized.graph.as_ref().expect("maxcut keeps its graph");
            let (f_max, _) = brute_force_optimum(g)?;
            let w = inst.hamiltonian.coefficient_norm();
            let (_, cost_best) = theta_best_of(
                inst,
                cfg.theta_best_restarts,
                rng::subseed(cfg.seed, "cli.optimize.best", run),
            )?;
            (Some(w - 2.0 * f_max), Some(((w - cost_best) / 2.0, w)))
        }
        InstanceKind::Separable => {
            let q = cfg.instance.qubits.expect("validated") as f64;
            (Some(-q), None)
        }
        _ => (None, None),
    };

    let mode = match o.optimizer {
        OptimizerKind::Rotosolve => OptimizerMode::RotoSolve,
        OptimizerKind::Rotogp => {
            OptimizerMode::RotoGp { kernel: o.kernel.expect("validated") }
        }
    };
    let n_f = o.n_f.clone().unwrap_or_else(|| inst.n_f.clone());
    let mut oc = OptimizerConfig::new(mode, n_f, inst.periods.clone());
    oc.shots = cfg.shots();
    oc.max_sweeps = o.sweeps;
    oc.subset_cap = o.subset_cap;
    oc.noise = cfg.noise;
    oc.max_shots = o.budget;
    oc.seed = rng::subseed(cfg.seed, "cli.optimize.run", run);
    oc.fit = o.refit.to_options(0);
    let trajectory = optimize(inst, &oc)?;
    Ok(RunOut { dim: inst.dim(), trajectory, e_gs, ratio_ref })
}
