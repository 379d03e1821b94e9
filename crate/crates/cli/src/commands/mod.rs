//! Command implementations. Shared here: instance realization from config,
//! optimum lookup, and deterministic file output.

mod benchmark;
mod fit;
mod make_instance;
mod optimize;
mod spectrum;

use crate::config::{CommandKind, ExperimentConfig, InstanceKind};
use anyhow::{Context, Result};
use std::path::Path;
use vqgp_core::problems::{
    self, exact_cost, find_theta_best, maxcut_instance, random_regular_graph,
    separable_cosine_instance, two_frequency_instance, Graph, ProblemInstance,
};
use vqgp_core::rng;

pub enum Outcome {
    Clean,
    /// Finished, but this many units (benchmark cells) failed.
    Partial(usize),
}

pub fn dispatch(kind: CommandKind, cfg: &ExperimentConfig) -> Result<Outcome> {
    std::fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating {}", cfg.out.display()))?;
    write_text(&cfg.out.join("effective_config.toml"), &cfg.to_toml())?;
    match kind {
        CommandKind::Spectrum => spectrum::run(cfg),
        CommandKind::Fit => fit::run(cfg),
        CommandKind::Benchmark => benchmark::run(cfg),
        CommandKind::Optimize => optimize::run(cfg),
        CommandKind::MakeInstance => make_instance::run(cfg),
    }
}

pub struct Realized {
    pub instance: ProblemInstance,
    pub graph: Option<Graph>,
}

/// Build the configured instance. MaxCut draws a fresh graph from
/// stream(seed, tag, index); the other kinds ignore the stream.
pub fn realize(
    cfg: &ExperimentConfig,
    seed: u64,
    tag: &str,
    index: u64,
    vertices_override: Option<usize>,
) -> Result<Realized> {
    let i = &cfg.instance;
    let realized = match i.kind {
        InstanceKind::Maxcut => {
            let v = vertices_override.unwrap_or_else(|| i.vertices.expect("validated"));
            let mut g_rng = rng::stream(seed, tag, index);
            let g = random_regular_graph(v, i.degree.expect("validated"), &mut g_rng)?;
            let inst = maxcut_instance(&g, i.layers.expect("validated"))?;
            Realized { instance: inst, graph: Some(g) }
        }
        InstanceKind::Separable => Realized {
            instance: separable_cosine_instance(i.qubits.expect("validated")),
            graph: None,
        },
        InstanceKind::TwoFrequency => {
            Realized { instance: two_frequency_instance(), graph: None }
        }
        InstanceKind::Load => {
            let path = i.path.as_ref().expect("validated");
            let inst = problems::io::load_instance_dir(path)
                .with_context(|| format!("loading instance from {}", path.display()))?;
            Realized { instance: inst, graph: None }
        }
    };
    Ok(realized)
}

/// The instance's best parameters and exact cost there: metadata if present,
/// otherwise a seeded multi-start exact line search.
pub fn theta_best_of(
    instance: &ProblemInstance,
    restarts: usize,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    if let Some(tb) = &instance.theta_best {
        let c = exact_cost(instance, tb)?;
        return Ok((tb.clone(), c));
    }
    Ok(find_theta_best(instance, restarts, seed)?)
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}
