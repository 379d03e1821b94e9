//! Instance persistence: hamiltonian and circuit text files plus a TOML
//! metadata sidecar carrying periods, frequency cutoffs, and optional
//! cached-optimum data.

use super::{ProblemError, ProblemInstance};
use crate::qsim::{ParamCircuit, PauliHamiltonian};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const METADATA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceMetadata {
    pub version: u32,
    pub periods: Vec<f64>,
    pub n_f: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_best: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
}

fn read(path: &Path) -> Result<String, ProblemError> {
    std::fs::read_to_string(path)
        .map_err(|source| ProblemError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<(), ProblemError> {
    std::fs::write(path, text)
        .map_err(|source| ProblemError::Io { path: path.display().to_string(), source })
}

/// Load an instance from its three files. Parse failures carry the file path
/// and the offending line number.
pub fn load_instance(
    hamiltonian: &Path,
    circuit: &Path,
    metadata: &Path,
) -> Result<ProblemInstance, ProblemError> {
    let h = PauliHamiltonian::from_text(&read(hamiltonian)?).map_err(|e| ProblemError::Metadata {
        path: hamiltonian.display().to_string(),
        message: e.to_string(),
    })?;
    let c = ParamCircuit::from_text(&read(circuit)?).map_err(|e| ProblemError::Metadata {
        path: circuit.display().to_string(),
        message: e.to_string(),
    })?;
    let meta: InstanceMetadata =
        toml::from_str(&read(metadata)?).map_err(|e| ProblemError::Metadata {
            path: metadata.display().to_string(),
            message: e.to_string(),
        })?;
    if meta.version != METADATA_VERSION {
        return Err(ProblemError::Metadata {
            path: metadata.display().to_string(),
            message: format!("unsupported version {} (expected {METADATA_VERSION})", meta.version),
        });
    }
    ProblemInstance::new(h, c, meta.periods, meta.n_f, meta.theta_best, meta.f_max)
}

/// Write `hamiltonian.txt`, `circuit.txt`, and `metadata.toml` into `dir`
/// (created if missing).
pub fn save_instance_dir(instance: &ProblemInstance, dir: &Path) -> Result<(), ProblemError> {
    std::fs::create_dir_all(dir)
        .map_err(|source| ProblemError::Io { path: dir.display().to_string(), source })?;
    write(&dir.join("hamiltonian.txt"), &instance.hamiltonian.to_text())?;
    write(&dir.join("circuit.txt"), &instance.circuit.to_text())?;
    let meta = InstanceMetadata {
        version: METADATA_VERSION,
        periods: instance.periods.clone(),
        n_f: instance.n_f.clone(),
        theta_best: instance.theta_best.clone(),
        f_max: instance.f_max,
    };
    let text = toml::to_string(&meta).expect("metadata serializes");
    write(&dir.join("metadata.toml"), &text)
}

/// Counterpart of [`save_instance_dir`] using the standard file names.
pub fn load_instance_dir(dir: &Path) -> Result<ProblemInstance, ProblemError> {
    load_instance(&dir.join("hamiltonian.txt"), &dir.join("circuit.txt"), &dir.join("metadata.toml"))
}
