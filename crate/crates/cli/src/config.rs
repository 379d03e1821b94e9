//! Experiment configuration: one TOML schema shared by all subcommands,
//! versioned and strict (unknown keys are errors). The effective config with
//! all defaults resolved is written next to the outputs so a run can be
//! reproduced from its artifacts alone.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use vqgp_core::analysis::{MetricKind, StrategyKind};
use vqgp_core::gp::FitOptions;
use vqgp_core::kernels::KernelFamily;
use vqgp_core::qsim::NoiseModel;

pub const CONFIG_VERSION: u32 = 1;

/// Config-level failure; always maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Spectrum,
    Fit,
    Benchmark,
    Optimize,
    MakeInstance,
}

impl CommandKind {
    pub fn label(self) -> &'static str {
        match self {
            CommandKind::Spectrum => "spectrum",
            CommandKind::Fit => "fit",
            CommandKind::Benchmark => "benchmark",
            CommandKind::Optimize => "optimize",
            CommandKind::MakeInstance => "make-instance",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Maxcut,
    Separable,
    TwoFrequency,
    Load,
}

/// Instance source: generated MaxCut/synthetic families or a bundle on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSection {
    pub kind: InstanceKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertices: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qubits: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub family: KernelFamily,
    /// Per-coordinate frequency cutoffs; defaults to the instance's.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_f: Option<Vec<usize>>,
    #[serde(default = "d_amplitude")]
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default = "d_fit_restarts")]
    pub restarts: usize,
    #[serde(default = "d_fit_iters")]
    pub max_iters: usize,
    #[serde(default = "d_fit_grad_tol")]
    pub grad_tol: f64,
}

impl FitSection {
    pub fn to_options(&self, seed: u64) -> FitOptions {
        FitOptions {
            restarts: self.restarts,
            max_iters: self.max_iters,
            seed,
            grad_tol: self.grad_tol,
        }
    }
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection {
            restarts: d_fit_restarts(),
            max_iters: d_fit_iters(),
            grad_tol: d_fit_grad_tol(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    /// Instances averaged per vertex count (fresh graphs for MaxCut, fresh
    /// random centers otherwise).
    #[serde(default = "d_spectrum_instances")]
    pub instances: usize,
    /// DFT grid per line; power of two.
    #[serde(default = "d_spectrum_grid")]
    pub grid: usize,
    /// Harmonics written per axis; defaults to grid/2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub harmonics: Option<usize>,
    /// MaxCut scaling study: one output file per vertex count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertices_grid: Option<Vec<usize>>,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            instances: d_spectrum_instances(),
            grid: d_spectrum_grid(),
            harmonics: None,
            vertices_grid: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Rotosolve,
    Rotogp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    #[serde(default = "d_optimizer")]
    pub optimizer: OptimizerKind,
    /// GP kernel family; required when optimizer = "rotogp".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelFamily>,
    #[serde(default = "d_runs")]
    pub runs: usize,
    /// Total shot budget per run; unset means sweeps only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default = "d_sweeps")]
    pub sweeps: usize,
    #[serde(default = "d_subset_cap")]
    pub subset_cap: usize,
    /// Line-model frequency counts; defaults to the instance's.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_f: Option<Vec<usize>>,
    /// Per-step GP refit budget (warm-started).
    #[serde(default = "d_refit")]
    pub refit: FitSection,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        OptimizeSection {
            optimizer: d_optimizer(),
            kernel: None,
            runs: d_runs(),
            budget: None,
            sweeps: d_sweeps(),
            subset_cap: d_subset_cap(),
            n_f: None,
            refit: d_refit(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub command: CommandKind,
    pub seed: u64,
    #[serde(default = "d_out")]
    pub out: PathBuf,
    pub instance: InstanceSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kernels: Vec<KernelSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub strategies: Vec<StrategyKind>,
    #[serde(default = "d_n_t_grid")]
    pub n_t_grid: Vec<usize>,
    #[serde(default = "d_trials")]
    pub trials: usize,
    /// Shots per measurement group; default depends on the command
    /// (20 for fit/benchmark, 100 for optimize).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    #[serde(default = "d_noise")]
    pub noise: NoiseModel,
    #[serde(default = "d_test_points")]
    pub test_points: usize,
    #[serde(default = "d_theta_best_restarts")]
    pub theta_best_restarts: usize,
    /// Metrics recorded by `benchmark`; unset means all four.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Vec<MetricKind>>,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub optimize: OptimizeSection,
}

fn d_out() -> PathBuf {
    PathBuf::from("out")
}
fn d_amplitude() -> f64 {
    1.0
}
fn d_fit_restarts() -> usize {
    8
}
fn d_fit_iters() -> usize {
    80
}
fn d_fit_grad_tol() -> f64 {
    1e-5
}
fn d_spectrum_instances() -> usize {
    50
}
fn d_spectrum_grid() -> usize {
    64
}
fn d_optimizer() -> OptimizerKind {
    OptimizerKind::Rotosolve
}
fn d_runs() -> usize {
    20
}
fn d_sweeps() -> usize {
    30
}
fn d_subset_cap() -> usize {
    300
}
fn d_refit() -> FitSection {
    FitSection { restarts: 1, max_iters: 6, grad_tol: 5e-3 }
}
fn d_n_t_grid() -> Vec<usize> {
    vec![10, 30, 60]
}
fn d_trials() -> usize {
    20
}
fn d_noise() -> NoiseModel {
    NoiseModel::Realistic
}
fn d_test_points() -> usize {
    200
}
fn d_theta_best_restarts() -> usize {
    16
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&raw)
            .map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))
    }

    /// Apply CLI overrides and per-command defaults.
    pub fn resolve(mut self, seed: Option<u64>, out: Option<PathBuf>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(o) = out {
            self.out = o;
        }
        if self.shots.is_none() {
            self.shots = Some(match self.command {
                CommandKind::Optimize => 100,
                _ => 20,
            });
        }
        self
    }

    pub fn shots(&self) -> usize {
        self.shots.expect("resolve() fills the shots default")
    }

    pub fn validate(&self, invoked: CommandKind) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError(msg));
        if self.version != CONFIG_VERSION {
            return fail(format!(
                "version: expected {CONFIG_VERSION}, got {}",
                self.version
            ));
        }
        if self.command != invoked {
            return fail(format!(
                "command: config says \"{}\" but the \"{}\" subcommand was invoked",
                self.command.label(),
                invoked.label()
            ));
        }
        self.validate_instance()?;
        match self.command {
            CommandKind::Benchmark => {
                if self.instance.kind != InstanceKind::Maxcut {
                    return fail("instance.kind: benchmark requires \"maxcut\"".into());
                }
                if self.kernels.is_empty() {
                    return fail("kernels: benchmark needs at least one kernel".into());
                }
                if self.kernels.iter().any(|k| k.n_f.is_some()) {
                    return fail(
                        "kernels.n_f: benchmark always uses the instance frequency counts"
                            .into(),
                    );
                }
                if self.strategies.is_empty() {
                    return fail("strategies: benchmark needs at least one strategy".into());
                }
                if self.n_t_grid.is_empty() || self.trials == 0 {
                    return fail("n_t_grid/trials: must be non-empty and positive".into());
                }
                if let Some(ms) = &self.metrics {
                    if ms.is_empty() {
                        return fail("metrics: set at least one metric or omit the key".into());
                    }
                }
            }
            CommandKind::Fit => {
                if self.kernels.is_empty() {
                    return fail("kernels: fit needs at least one kernel".into());
                }
                if self.strategies.len() != 1 {
                    return fail("strategies: fit needs exactly one strategy".into());
                }
                if self.n_t_grid.is_empty() {
                    return fail("n_t_grid: fit needs at least one training size".into());
                }
            }
            CommandKind::Optimize => {
                let o = &self.optimize;
                if o.runs == 0 {
                    return fail("optimize.runs: must be positive".into());
                }
                if o.optimizer == OptimizerKind::Rotogp && o.kernel.is_none() {
                    return fail("optimize.kernel: required when optimizer = \"rotogp\"".into());
                }
            }
            CommandKind::Spectrum => {
                let s = &self.spectrum;
                if s.instances == 0 {
                    return fail("spectrum.instances: must be positive".into());
                }
                if s.grid < 16 || !s.grid.is_power_of_two() {
                    return fail("spectrum.grid: must be a power of two >= 16".into());
                }
                if let Some(vg) = &s.vertices_grid {
                    if self.instance.kind != InstanceKind::Maxcut {
                        return fail(
                            "spectrum.vertices_grid: only meaningful for MaxCut".into(),
                        );
                    }
                    if vg.is_empty() {
                        return fail("spectrum.vertices_grid: must be non-empty".into());
                    }
                }
            }
            CommandKind::MakeInstance => {}
        }
        Ok(())
    }

    fn validate_instance(&self) -> Result<(), ConfigError> {
        let i = &self.instance;
        let need = |field: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError(format!(
                    "instance.{field}: required for kind \"{:?}\"",
                    i.kind
                )))
            }
        };
        let reject = |field: &str, absent: bool| {
            if absent {
                Ok(())
            } else {
                Err(ConfigError(format!(
                    "instance.{field}: not valid for kind \"{:?}\"",
                    i.kind
                )))
            }
        };
        match i.kind {
            InstanceKind::Maxcut => {
                need("vertices", i.vertices.is_some())?;
                need("degree", i.degree.is_some())?;
                need("layers", i.layers.is_some())?;
                reject("qubits", i.qubits.is_none())?;
                reject("path", i.path.is_none())?;
            }
            InstanceKind::Separable => {
                need("qubits", i.qubits.is_some())?;
                reject("vertices", i.vertices.is_none())?;
                reject("degree", i.degree.is_none())?;
                reject("layers", i.layers.is_none())?;
                reject("path", i.path.is_none())?;
            }
            InstanceKind::TwoFrequency => {
                reject("vertices", i.vertices.is_none())?;
                reject("degree", i.degree.is_none())?;
                reject("layers", i.layers.is_none())?;
                reject("qubits", i.qubits.is_none())?;
                reject("path", i.path.is_none())?;
            }
            InstanceKind::Load => {
                need("path", i.path.is_some())?;
                reject("vertices", i.vertices.is_none())?;
                reject("degree", i.degree.is_none())?;
                reject("layers", i.layers.is_none())?;
                reject("qubits", i.qubits.is_none())?;
            }
        }
        Ok(())
    }

    /// Serialize the fully resolved config for the output directory.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
