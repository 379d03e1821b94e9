//! Per-axis Fourier spectra of exact cost lines, at a uniformly random
//! center and at the instance optimum, averaged over instances.

use super::{realize, theta_best_of, write_text, Outcome};
use crate::config::{ExperimentConfig, InstanceKind};
use anyhow::Result;
use rand::Rng;
use rayon::prelude::*;
use vqgp_core::analysis::line_spectrum;
use vqgp_core::rng;

/// magnitudes[axis][harmonic] at the random center and at the optimum
struct InstanceSpectra {
    random: Vec<Vec<f64>>,
    best: Vec<Vec<f64>>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let s = &cfg.spectrum;
    let scaling = cfg.instance.kind == InstanceKind::Maxcut && s.vertices_grid.is_some();
    let vertex_list: Vec<Option<usize>> = match &s.vertices_grid {
        Some(vg) if scaling => vg.iter().map(|v| Some(*v)).collect(),
        _ => vec![None],
    };

    for v in vertex_list {
        let per_seed = match v {
            Some(n) => rng::subseed(cfg.seed, "cli.spectrum.scale", n as u64),
            None => cfg.seed,
        };
        let spectra: Vec<InstanceSpectra> = (0..s.instances)
            .into_par_iter()
            .map(|i| instance_spectra(cfg, per_seed, i as u64, v))
            .collect::<Result<_>>()?;

        let dim = spectra[0].random.len();
        let harmonics = s.harmonics.unwrap_or(s.grid / 2).min(s.grid / 2);
        let mut csv = String::from("axis,harmonic,magnitude_random,magnitude_best\n");
        for axis in 0..dim {
            for h in 0..=harmonics {
                let mr =
                    spectra.iter().map(|sp| sp.random[axis][h]).sum::<f64>() / spectra.len() as f64;
                let mb =
                    spectra.iter().map(|sp| sp.best[axis][h]).sum::<f64>() / spectra.len() as f64;
                csv.push_str(&format!("{axis},{h},{mr},{mb}\n"));
            }
        }
        let name = match v {
            Some(n) => format!("spectrum_v{n}.csv"),
            None => "spectrum.csv".to_string(),
        };
        write_text(&cfg.out.join(name), &csv)?;
    }
    Ok(Outcome::Clean)
}

fn instance_spectra(
    cfg: &ExperimentConfig,
    per_seed: u64,
    index: u64,
    vertices: Option<usize>,
) -> Result<InstanceSpectra> {
    let realized = realize(cfg, per_seed, "cli.spectrum.graph", index, vertices)?;
    let inst = &realized.instance;
    let dim = inst.dim();
    let grid = cfg.spectrum.grid;

    let mut c_rng = rng::stream(per_seed, "cli.spectrum.center", index);
    let center: Vec<f64> =
        inst.periods.iter().map(|p| c_rng.random_range(0.0..*p)).collect();
    let (tb, _) = theta_best_of(
        inst,
        cfg.theta_best_restarts,
        rng::subseed(per_seed, "cli.spectrum.best", index),
    )?;

    let mut random = Vec::with_capacity(dim);
    let mut best = Vec::with_capacity(dim);
    for axis in 0..dim {
        let sp_r = line_spectrum(inst, &center, axis, grid)?;
        let sp_b = line_spectrum(inst, &tb, axis, grid)?;
        random.push((0..=grid / 2).map(|h| sp_r.magnitude(h)).collect());
        best.push((0..=grid / 2).map(|h| sp_b.magnitude(h)).collect());
    }
    Ok(InstanceSpectra { random, best })
}
