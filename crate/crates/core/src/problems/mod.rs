//! Problem instances: MaxCut on random regular graphs with QAOA circuits,
//! brute-force cut oracles, the modified approximation ratio, and synthetic
//! multi-frequency instances for ingestion tests.
//!
//! Sign conventions: the cost observable is Ĥ_C = Σ w_{ij} Z_i Z_j without
//! constant offset; the cut count is reconstructed as F = Σ w_{ij}(1 −
//! ⟨Z_iZ_j⟩)/2 = (Σw − ⟨Ĥ_C⟩)/2, so minimizing ⟨Ĥ_C⟩ maximizes F.

pub mod io;

pub use io::{load_instance, load_instance_dir, save_instance_dir, InstanceMetadata};

use crate::qsim::{
    self, exact_expectation, prepare_state, Gate, InitialState, ParamCircuit, PauliHamiltonian,
    PauliString, QsimError,
};
use crate::rng;
use crate::trigpoly::{self, TrigPoly};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::HashSet;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("graph generation failed after {0} attempts")]
    GenerationFailed(usize),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("{what} has {got} entries, circuit has {expected} parameters")]
    MetadataLength { what: &'static str, expected: usize, got: usize },
    #[error("brute force supports up to 24 vertices, got {0}")]
    TooLarge(usize),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("metadata error in {path}: {message}")]
    Metadata { path: String, message: String },
    #[error("degenerate optimum: F(θ_best) = 0")]
    DegenerateOptimum,
}

/// Undirected simple graph with per-edge weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
}

impl Graph {
    /// Edges are normalized to (min, max); self-loops and duplicates are
    /// rejected.
    pub fn new(
        n_vertices: usize,
        edges: Vec<(usize, usize)>,
        weights: Vec<f64>,
    ) -> Result<Self, ProblemError> {
        if n_vertices == 0 {
            return Err(ProblemError::InvalidGraph("graph needs at least one vertex".into()));
        }
        if edges.len() != weights.len() {
            return Err(ProblemError::InvalidGraph(format!(
                "{} edges but {} weights",
                edges.len(),
                weights.len()
            )));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        let mut seen = HashSet::new();
        for &(u, v) in &edges {
            if u == v {
                return Err(ProblemError::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            if u >= n_vertices || v >= n_vertices {
                return Err(ProblemError::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for {n_vertices} vertices"
                )));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(ProblemError::InvalidGraph(format!("duplicate edge ({}, {})", e.0, e.1)));
            }
            normalized.push(e);
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(ProblemError::InvalidGraph("weights must be finite".into()));
        }
        Ok(Graph { n_vertices, edges: normalized, weights })
    }

    pub fn unweighted(n_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self, ProblemError> {
        let w = vec![1.0; edges.len()];
        Graph::new(n_vertices, edges, w)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Total weight of edges cut by the bipartition encoded in `bits`
    /// (vertex v on side (bits >> v) & 1).
    pub fn cut_of_bits(&self, bits: u64) -> f64 {
        self.edges
            .iter()
            .zip(&self.weights)
            .filter(|(&(u, v), _)| (bits >> u ^ bits >> v) & 1 == 1)
            .map(|(_, &w)| w)
            .sum()
    }

    /// Text form: `vertices <n>` then one `u v [weight]` line per edge.
    pub fn to_text(&self) -> String {
        let mut s = format!("vertices {}\n", self.n_vertices);
        for (&(u, v), &w) in self.edges.iter().zip(&self.weights) {
            if w == 1.0 {
                s.push_str(&format!("{u} {v}\n"));
            } else {
                s.push_str(&format!("{u} {v} {w}\n"));
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, ProblemError> {
        let mut n_vertices: Option<usize> = None;
        let mut edges = Vec::new();
        let mut weights = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = |msg: String| ProblemError::InvalidGraph(format!("line {}: {msg}", ln + 1));
            if parts[0] == "vertices" {
                if parts.len() != 2 {
                    return Err(bad("expected `vertices <n>`".into()));
                }
                n_vertices =
                    Some(parts[1].parse().map_err(|_| bad(format!("bad vertex count {:?}", parts[1])))?);
                continue;
            }
            if parts.len() < 2 || parts.len() > 3 {
                return Err(bad("expected `u v [weight]`".into()));
            }
            let u: usize = parts[0].parse().map_err(|_| bad(format!("bad vertex {:?}", parts[0])))?;
            let v: usize = parts[1].parse().map_err(|_| bad(format!("bad vertex {:?}", parts[1])))?;
            let w: f64 = if parts.len() == 3 {
                parts[2].parse().map_err(|_| bad(format!("bad weight {:?}", parts[2])))?
            } else {
                1.0
            };
            edges.push((u, v));
            weights.push(w);
        }
        let n = n_vertices
            .ok_or_else(|| ProblemError::InvalidGraph("missing `vertices <n>` line".into()))?;
        Graph::new(n, edges, weights)
    }
}

/// Uniform-ish random d-regular simple graph via the pairing model:
/// d stubs per vertex, random perfect matching, rejected on loops or
/// multi-edges (up to 10^4 attempts).
pub fn random_regular_graph<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    rng: &mut R,
) -> Result<Graph, ProblemError> {
    if n * d % 2 != 0 {
        return Err(ProblemError::Infeasible(format!("n·d = {} is odd", n * d)));
    }
    if d >= n {
        return Err(ProblemError::Infeasible(format!("degree {d} needs more than {n} vertices")));
    }
    let attempts = 10_000;
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(d)).collect();
    for _ in 0..attempts {
        stubs.shuffle(rng);
        let mut seen = HashSet::new();
        let mut ok = true;
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || !seen.insert((u.min(v), u.max(v))) {
                ok = false;
                break;
            }
        }
        if ok {
            let edges: Vec<(usize, usize)> =
                stubs.chunks_exact(2).map(|p| (p[0].min(p[1]), p[0].max(p[1]))).collect();
            return Graph::unweighted(n, edges);
        }
    }
    Err(ProblemError::GenerationFailed(attempts))
}

/// Ĥ_C = Σ_{(i,j)∈E} w_{ij} Z_i Z_j. An empty edge set yields the zero
/// observable (a single identity term with coefficient 0). All ZZ terms are
/// qubit-wise commuting, so MaxCut always measures in one group.
pub fn maxcut_hamiltonian(g: &Graph) -> PauliHamiltonian {
    let n = g.n_vertices;
    let mut terms = Vec::with_capacity(g.edges.len().max(1));
    for (&(u, v), &w) in g.edges.iter().zip(&g.weights) {
        let letters: String =
            (0..n).map(|k| if k == u || k == v { 'Z' } else { 'I' }).collect();
        terms.push(PauliString::new(w, &letters).expect("valid ZZ term"));
    }
    if terms.is_empty() {
        terms.push(PauliString::new(0.0, &"I".repeat(n)).expect("identity term"));
    }
    PauliHamiltonian::new(terms).expect("consistent term sizes")
}

/// QAOA ansatz: p layers of exp(−iγ_j Ĥ_C) · exp(−iβ_j Ĥ_B) applied to the
/// Ĥ_B ground state |−⟩_x^⊗N. Parameters are ordered (γ_1, β_1, …, γ_p, β_p):
/// even 0-based indices drive the problem Hamiltonian, odd ones the mixer.
pub fn qaoa_circuit(g: &Graph, p: usize) -> Result<ParamCircuit, ProblemError> {
    if p == 0 {
        return Err(ProblemError::Infeasible("layer count p must be >= 1".into()));
    }
    let n = g.n_vertices;
    let problem_terms: Vec<PauliString> = maxcut_hamiltonian(g).terms().to_vec();
    let mixer_terms: Vec<PauliString> = (0..n)
        .map(|k| {
            let letters: String = (0..n).map(|q| if q == k { 'X' } else { 'I' }).collect();
            PauliString::new(1.0, &letters).expect("valid X term")
        })
        .collect();
    let mut gates = Vec::with_capacity(2 * p);
    for layer in 0..p {
        gates.push(Gate { param: 2 * layer, generator: problem_terms.clone() });
        gates.push(Gate { param: 2 * layer + 1, generator: mixer_terms.clone() });
    }
    Ok(ParamCircuit::new(n, 2 * p, InitialState::AllMinusX, gates)?)
}

/// A cost observable plus the circuit that probes it, with per-coordinate
/// periods, recommended trigonometric frequency cutoffs, and (optionally)
/// cached optimum data.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub hamiltonian: PauliHamiltonian,
    pub circuit: ParamCircuit,
    pub periods: Vec<f64>,
    pub n_f: Vec<usize>,
    pub theta_best: Option<Vec<f64>>,
    pub f_max: Option<f64>,
}

impl ProblemInstance {
    pub fn new(
        hamiltonian: PauliHamiltonian,
        circuit: ParamCircuit,
        periods: Vec<f64>,
        n_f: Vec<usize>,
        theta_best: Option<Vec<f64>>,
        f_max: Option<f64>,
    ) -> Result<Self, ProblemError> {
        let dim = circuit.n_params();
        if periods.len() != dim {
            return Err(ProblemError::MetadataLength { what: "periods", expected: dim, got: periods.len() });
        }
        if n_f.len() != dim {
            return Err(ProblemError::MetadataLength { what: "n_f", expected: dim, got: n_f.len() });
        }
        if let Some(tb) = &theta_best {
            if tb.len() != dim {
                return Err(ProblemError::MetadataLength { what: "theta_best", expected: dim, got: tb.len() });
            }
        }
        if hamiltonian.n_qubits() != circuit.n_qubits() {
            return Err(ProblemError::Qsim(QsimError::SizeMismatch(format!(
                "hamiltonian on {} qubits, circuit on {}",
                hamiltonian.n_qubits(),
                circuit.n_qubits()
            ))));
        }
        if periods.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(ProblemError::InvalidGraph("periods must be positive".into()));
        }
        Ok(ProblemInstance { hamiltonian, circuit, periods, n_f, theta_best, f_max })
    }

    pub fn dim(&self) -> usize {
        self.circuit.n_params()
    }
}

/// MaxCut instance: Ĥ_C, the p-layer QAOA circuit, period π everywhere,
/// recommended n_f = 4 on problem angles and 1 on mixer angles.
pub fn maxcut_instance(g: &Graph, p: usize) -> Result<ProblemInstance, ProblemError> {
    let h = maxcut_hamiltonian(g);
    let c = qaoa_circuit(g, p)?;
    let dim = 2 * p;
    let n_f = (0..dim).map(|k| if k % 2 == 0 { 4 } else { 1 }).collect();
    ProblemInstance::new(h, c, vec![PI; dim], n_f, None, None)
}

/// Exhaustive maximum cut: (F_max, all maximizing bitstrings). Capped at 24
/// vertices.
pub fn brute_force_optimum(g: &Graph) -> Result<(f64, Vec<u64>), ProblemError> {
    if g.n_vertices > 24 {
        return Err(ProblemError::TooLarge(g.n_vertices));
    }
    let mut best = f64::NEG_INFINITY;
    let mut argmax = Vec::new();
    for b in 0u64..1 << g.n_vertices {
        let cut = g.cut_of_bits(b);
        if cut > best + 1e-12 {
            best = cut;
            argmax.clear();
            argmax.push(b);
        } else if (cut - best).abs() <= 1e-12 {
            argmax.push(b);
        }
    }
    Ok((best, argmax))
}

/// Exact cost ⟨ψ(θ)|H|ψ(θ)⟩.
pub fn exact_cost(instance: &ProblemInstance, theta: &[f64]) -> Result<f64, ProblemError> {
    let state = prepare_state(&instance.circuit, theta)?;
    Ok(exact_expectation(&state, &instance.hamiltonian)?)
}

/// Cut count F(θ) = (Σw − ⟨Ĥ_C⟩)/2, with Σw = Σ|coefficients|.
pub fn cut_value(instance: &ProblemInstance, theta: &[f64]) -> Result<f64, ProblemError> {
    let total = instance.hamiltonian.coefficient_norm();
    Ok((total - exact_cost(instance, theta)?) / 2.0)
}

/// Modified approximation ratio r = F(θ)/F(θ_best).
pub fn approximation_ratio(
    instance: &ProblemInstance,
    theta: &[f64],
    theta_best: &[f64],
) -> Result<f64, ProblemError> {
    let denom = cut_value(instance, theta_best)?;
    if denom.abs() < 1e-12 {
        return Err(ProblemError::DegenerateOptimum);
    }
    Ok(cut_value(instance, theta)? / denom)
}

/// Upper bound on the trig frequency content of the exact cost along
/// coordinate `axis` in units of 2π/period: the total generator driven by
/// θ_axis has spectral radius ≤ Σ|c|, so eigenvalue gaps stay within 2Σ|c|.
pub fn line_frequency_cap(circuit: &ParamCircuit, period: f64, axis: usize) -> usize {
    let coeff_sum: f64 = circuit
        .gates()
        .iter()
        .filter(|g| g.param == axis)
        .flat_map(|g| g.generator.iter())
        .map(|t| t.coefficient().abs())
        .sum();
    (coeff_sum * period / PI).ceil() as usize
}

/// Exact cost at θ + offset·e_axis for every offset, reusing the state up to
/// the first gate that depends on θ_axis.
pub fn exact_line_values(
    circuit: &ParamCircuit,
    h: &PauliHamiltonian,
    theta: &[f64],
    axis: usize,
    offsets: &[f64],
) -> Result<Vec<f64>, ProblemError> {
    if theta.len() != circuit.n_params() {
        return Err(ProblemError::Qsim(QsimError::SizeMismatch(format!(
            "got {} parameters, circuit has {}",
            theta.len(),
            circuit.n_params()
        ))));
    }
    let split = circuit.gates().iter().position(|g| g.param == axis).unwrap_or(circuit.gates().len());
    let mut prefix = qsim::initial_statevector(circuit);
    for gate in &circuit.gates()[..split] {
        qsim::apply_gate(&mut prefix, gate, theta[gate.param]);
    }
    let mut out = Vec::with_capacity(offsets.len());
    let mut shifted = theta.to_vec();
    for &off in offsets {
        shifted[axis] = theta[axis] + off;
        let mut state = prefix.clone();
        for gate in &circuit.gates()[split..] {
            qsim::apply_gate(&mut state, gate, shifted[gate.param]);
        }
        out.push(exact_expectation(&state, h)?);
    }
    Ok(out)
}

/// Noiseless multi-start coordinate descent on the exact cost with exact
/// per-line trigonometric minimization. Returns (θ_best, minimal cost).
/// Restart 0 starts at θ = 0, the rest uniform over one period box;
/// deterministic for a given seed.
pub fn find_theta_best(
    instance: &ProblemInstance,
    restarts: usize,
    seed: u64,
) -> Result<(Vec<f64>, f64), ProblemError> {
    let dim = instance.dim();
    let caps: Vec<usize> = (0..dim)
        .map(|k| line_frequency_cap(&instance.circuit, instance.periods[k], k))
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in 0..restarts.max(1) {
        let mut theta = vec![0.0; dim];
        if r > 0 {
            let mut rng = rng::stream(seed, "problems.theta-best", r as u64);
            for (k, t) in theta.iter_mut().enumerate() {
                *t = rng.random_range(0.0..instance.periods[k]);
            }
        }
        let mut cost = exact_cost(instance, &theta)?;
        for _sweep in 0..60 {
            let before = cost;
            for k in 0..dim {
                let cap = caps[k];
                if cap == 0 {
                    continue;
                }
                let offsets = trigpoly::sample_offsets(instance.periods[k], cap);
                let values =
                    exact_line_values(&instance.circuit, &instance.hamiltonian, &theta, k, &offsets)?;
                let poly = TrigPoly::interpolate(theta[k], instance.periods[k], cap, &values);
                let (t_star, f_star) = poly.minimize((8 * cap + 64).max(256));
                if f_star < cost - 1e-13 {
                    theta[k] = t_star;
                    cost = f_star;
                }
            }
            if cost > before - 1e-12 {
                break;
            }
        }
        // exact recomputation guards against accumulated interpolation error
        let cost = exact_cost(instance, &theta)?;
        let better = match &best {
            None => true,
            Some((bc, _)) => cost < *bc,
        };
        if better {
            best = Some((cost, theta));
        }
    }
    let (cost, theta) = best.expect("at least one restart");
    Ok((theta, cost))
}

/// Separable benchmark: H = Σ_k Z_k with one X rotation per qubit, so the
/// exact cost is Σ_k cos θ_k (period 2π, single frequency, minimum −n at
/// θ = π·1).
pub fn separable_cosine_instance(n: usize) -> ProblemInstance {
    let terms: Vec<PauliString> = (0..n)
        .map(|k| {
            let letters: String = (0..n).map(|q| if q == k { 'Z' } else { 'I' }).collect();
            PauliString::new(1.0, &letters).expect("valid Z term")
        })
        .collect();
    let gates: Vec<Gate> = (0..n)
        .map(|k| {
            let letters: String = (0..n).map(|q| if q == k { 'X' } else { 'I' }).collect();
            Gate { param: k, generator: vec![PauliString::new(0.5, &letters).expect("valid X term")] }
        })
        .collect();
    let h = PauliHamiltonian::new(terms).expect("consistent sizes");
    let c = ParamCircuit::new(n, n, InitialState::AllZero, gates).expect("valid circuit");
    ProblemInstance::new(h, c, vec![TAU; n], vec![1; n], Some(vec![PI; n]), None)
        .expect("consistent metadata")
}

/// Synthetic 6-qubit ingestion instance in the style of a compiled molecular
/// problem: each parameter drives one two-qubit generator (X_aY_b + Y_aX_b)/2
/// whose eigenvalues {0, ±1} put exactly the frequencies {1, 2} on every
/// cost line (period 2π, recommended n_f = 2), and the observable splits into
/// three qubit-wise-commuting measurement groups (Z-, X-, and Y-type).
pub fn two_frequency_instance() -> ProblemInstance {
    let n = 6;
    let word = |pairs: &[(usize, char)]| -> String {
        (0..n)
            .map(|q| pairs.iter().find(|(k, _)| *k == q).map_or('I', |(_, c)| *c))
            .collect()
    };
    let h = PauliHamiltonian::new(vec![
        PauliString::new(0.9, &word(&[(0, 'Z')])).unwrap(),
        PauliString::new(0.7, &word(&[(1, 'Z'), (2, 'Z')])).unwrap(),
        PauliString::new(0.4, &word(&[(3, 'Z'), (4, 'Z')])).unwrap(),
        PauliString::new(0.5, &word(&[(0, 'X'), (1, 'X')])).unwrap(),
        PauliString::new(0.3, &word(&[(2, 'X'), (3, 'X')])).unwrap(),
        PauliString::new(0.2, &word(&[(1, 'Y'), (2, 'Y')])).unwrap(),
        PauliString::new(0.15, &word(&[(4, 'Y'), (5, 'Y')])).unwrap(),
    ])
    .expect("consistent sizes");
    let pair_gate = |param: usize, a: usize, b: usize| Gate {
        param,
        generator: vec![
            PauliString::new(0.5, &word(&[(a, 'X'), (b, 'Y')])).unwrap(),
            PauliString::new(0.5, &word(&[(a, 'Y'), (b, 'X')])).unwrap(),
        ],
    };
    let gates = vec![
        pair_gate(0, 0, 1),
        pair_gate(1, 1, 2),
        pair_gate(2, 2, 3),
        pair_gate(3, 3, 4),
        pair_gate(4, 4, 5),
        pair_gate(5, 0, 5),
    ];
    let c = ParamCircuit::new(n, 6, InitialState::AllMinusX, gates).expect("valid circuit");
    ProblemInstance::new(h, c, vec![TAU; 6], vec![2; 6], None, None).expect("consistent metadata")
}
