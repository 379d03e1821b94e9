//! Generate an instance bundle on disk: Hamiltonian and circuit text files
//! plus metadata with periods, frequency counts, and the computed optimum.

use super::{realize, write_text, Outcome};
use crate::config::{ExperimentConfig, InstanceKind};
use anyhow::Result;
use vqgp_core::problems::{find_theta_best, io::save_instance_dir};
use vqgp_core::rng;

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let realized = realize(cfg, cfg.seed, "cli.make-instance.graph", 0, None)?;
    let mut inst = realized.instance;

    if inst.theta_best.is_none() {
        let (tb, cost_best) = find_theta_best(
            &inst,
            cfg.theta_best_restarts,
            rng::subseed(cfg.seed, "cli.make-instance.best", 0),
        )?;
        if cfg.instance.kind == InstanceKind::Maxcut {
            let w = inst.hamiltonian.coefficient_norm();
            inst.f_max = Some((w - cost_best) / 2.0);
        }
        inst.theta_best = Some(tb);
    }

    let dir = cfg.out.join("instance");
    save_instance_dir(&inst, &dir)?;
    if let Some(g) = &realized.graph {
        write_text(&dir.join("graph.txt"), &g.to_text())?;
    }
    println!(
        "wrote {} ({} qubits, {} parameters, {} measurement groups)",
        dir.display(),
        inst.circuit.n_qubits(),
        inst.dim(),
        inst.hamiltonian.groups().len()
    );
    Ok(Outcome::Clean)
}
