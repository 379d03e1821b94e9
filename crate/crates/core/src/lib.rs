//! Gaussian-process surrogate modeling for noisy variational-quantum cost
//! functions.
//!
//! The crate is organized as a pipeline:
//!
//! * [`kernels`] — one-dimensional line kernels (SE, Matérn, periodic SE, and
//!   trigonometric families with optional frequency tails) composed into
//!   product kernels over circuit parameters;
//! * [`gp`] — exact GP regression with heteroscedastic observation noise and
//!   multi-start marginal-likelihood fitting;
//! * [`qsim`] — a statevector simulator for Pauli-generated circuits with
//!   exact, sampled, and Gaussianized cost estimators;
//! * [`problems`] — MaxCut instances, their QAOA circuits, and file formats;
//! * [`analysis`] — model-quality benchmarks (local sampling strategies,
//!   minimum-location metrics, Fourier spectra of cost lines);
//! * [`rotogp`] — coordinate-descent optimizers: trigonometric line fits
//!   (RotoSolve) and the GP-assisted variant (RotoGP).

pub mod analysis;
pub mod gp;
pub mod kernels;
mod linalg;
pub mod problems;
pub mod qsim;
pub mod rng;
pub mod rotogp;
pub mod stats;
mod trigpoly;

pub use analysis::{AnalysisError, MetricKind, MetricRecord, SamplingStrategy, StrategyKind};
pub use gp::{FitOptions, FitReport, FittedGp, GpError, Posterior, TrainingSet};
pub use kernels::{KernelError, KernelFamily, LineKernelSpec, ProductKernelSpec};
pub use problems::{Graph, ProblemError, ProblemInstance};
pub use qsim::{
    NoiseModel, ParamCircuit, PauliHamiltonian, PauliString, QsimError, ShotEstimate,
};
pub use rotogp::{OptimizerConfig, OptimizerMode, RotoError, Trajectory, TrajectoryEntry};
