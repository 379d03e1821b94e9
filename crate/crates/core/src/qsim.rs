//! Statevector simulation of Pauli-rotation circuits and shot-noise models.
//!
//! Conventions: qubit 0 is the least significant bit of a basis index, and
//! character i (left to right) of a Pauli letter string acts on qubit i.
//! Gates are exponentials exp(−iθ_k G) of Hermitian generators G = Σ_j c_j P_j
//! with mutually commuting terms, applied as Π_j exp(−iθ_k c_j P_j) using
//! exp(−iφP) = cos φ·I − i sin φ·P.

use crate::stats;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QsimError {
    #[error("invalid pauli string: {0}")]
    InvalidPauli(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("gate {gate} generator terms do not mutually commute")]
    NonCommutingGenerator { gate: usize },
    #[error("shot count must be >= 1")]
    InvalidShots,
    #[error("invalid initial state: {0}")]
    InvalidState(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A weighted Pauli word g·P, P ∈ {I,X,Y,Z}^n. Stored as bit masks: the
/// x/y/z masks are disjoint; bit k set means that letter acts on qubit k.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    coefficient: f64,
    n_qubits: usize,
    x_mask: u64,
    y_mask: u64,
    z_mask: u64,
}

impl PauliString {
    pub fn new(coefficient: f64, letters: &str) -> Result<Self, QsimError> {
        if !coefficient.is_finite() {
            return Err(QsimError::InvalidPauli(format!("coefficient {coefficient} is not finite")));
        }
        let n_qubits = letters.len();
        if n_qubits == 0 || n_qubits > 63 {
            return Err(QsimError::InvalidPauli(format!(
                "need between 1 and 63 letters, got {n_qubits}"
            )));
        }
        let (mut x, mut y, mut z) = (0u64, 0u64, 0u64);
        for (k, c) in letters.chars().enumerate() {
            match c {
                'I' => {}
                'X' => x |= 1 << k,
                'Y' => y |= 1 << k,
                'Z' => z |= 1 << k,
                other => {
                    return Err(QsimError::InvalidPauli(format!(
                        "letter '{other}' at position {k} (allowed: I X Y Z)"
                    )))
                }
            }
        }
        Ok(PauliString { coefficient, n_qubits, x_mask: x, y_mask: y, z_mask: z })
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn letter(&self, qubit: usize) -> char {
        let bit = 1u64 << qubit;
        if self.x_mask & bit != 0 {
            'X'
        } else if self.y_mask & bit != 0 {
            'Y'
        } else if self.z_mask & bit != 0 {
            'Z'
        } else {
            'I'
        }
    }

    pub fn letters(&self) -> String {
        (0..self.n_qubits).map(|k| self.letter(k)).collect()
    }

    /// Qubits the string acts on non-trivially.
    pub fn support(&self) -> u64 {
        self.x_mask | self.y_mask | self.z_mask
    }

    pub fn is_identity(&self) -> bool {
        self.support() == 0
    }

    /// Full-operator commutation: the strings commute iff they disagree (with
    /// both non-identity) on an even number of qubits.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let clash = (self.x_mask & (other.y_mask | other.z_mask))
            | (self.y_mask & (other.x_mask | other.z_mask))
            | (self.z_mask & (other.x_mask | other.y_mask));
        clash.count_ones() % 2 == 0
    }

    /// Qubit-wise compatible: on every shared qubit the letters agree.
    pub fn qubit_wise_compatible(&self, other: &PauliString) -> bool {
        ((self.x_mask & (other.y_mask | other.z_mask))
            | (self.y_mask & (other.x_mask | other.z_mask))
            | (self.z_mask & (other.x_mask | other.y_mask)))
            == 0
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.coefficient, self.letters())
    }
}

impl FromStr for PauliString {
    type Err = QsimError;

    /// `<coefficient> <letters>`, e.g. `0.5 ZZII`.
    fn from_str(s: &str) -> Result<Self, QsimError> {
        let mut it = s.split_whitespace();
        let (Some(coeff), Some(letters), None) = (it.next(), it.next(), it.next()) else {
            return Err(QsimError::InvalidPauli(format!("expected `<coefficient> <letters>`, got {s:?}")));
        };
        let coefficient: f64 = coeff
            .parse()
            .map_err(|_| QsimError::InvalidPauli(format!("bad coefficient {coeff:?}")))?;
        PauliString::new(coefficient, letters)
    }
}

/// One simultaneously-measurable set of Hamiltonian terms: every qubit
/// carries at most one non-identity letter across the group.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementGroup {
    /// Indices into the Hamiltonian term list.
    pub terms: Vec<usize>,
    /// Fused letter masks: qubits measured in the X (resp. Y) basis.
    rot_x: u64,
    rot_y: u64,
    /// Per term: (coefficient, support mask after rotation to the Z basis).
    eval: Vec<(f64, u64)>,
}

impl MeasurementGroup {
    /// Group value on a sampled bitstring: Σ g_α (−1)^{popcount(b & support)}.
    pub fn value_on(&self, bits: u64) -> f64 {
        self.eval
            .iter()
            .map(|&(c, m)| if (bits & m).count_ones() % 2 == 0 { c } else { -c })
            .sum()
    }
}

/// A Pauli-sum observable with a qubit-wise-commuting measurement partition.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliHamiltonian {
    terms: Vec<PauliString>,
    groups: Vec<MeasurementGroup>,
    n_qubits: usize,
}

impl PauliHamiltonian {
    /// Greedy qubit-wise-commuting grouping in term order: each term joins
    /// the first group it is compatible with.
    pub fn new(terms: Vec<PauliString>) -> Result<Self, QsimError> {
        if terms.is_empty() {
            return Err(QsimError::SizeMismatch("hamiltonian needs at least one term".into()));
        }
        let n_qubits = terms[0].n_qubits;
        for t in &terms {
            if t.n_qubits != n_qubits {
                return Err(QsimError::SizeMismatch(format!(
                    "term sizes differ: {} vs {n_qubits} qubits",
                    t.n_qubits
                )));
            }
        }
        // fused (x, y, z) masks per group; a term fits if its letters agree
        // with the fused letters wherever both are non-identity
        let mut fused: Vec<(u64, u64, u64)> = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for (i, t) in terms.iter().enumerate() {
            let mut placed = false;
            for (g, f) in fused.iter_mut().enumerate() {
                let clash = (t.x_mask & (f.1 | f.2)) | (t.y_mask & (f.0 | f.2)) | (t.z_mask & (f.0 | f.1));
                if clash == 0 {
                    f.0 |= t.x_mask;
                    f.1 |= t.y_mask;
                    f.2 |= t.z_mask;
                    members[g].push(i);
                    placed = true;
                    break;
                }
            }
            if !placed {
                fused.push((t.x_mask, t.y_mask, t.z_mask));
                members.push(vec![i]);
            }
        }
        let groups = members
            .into_iter()
            .zip(&fused)
            .map(|(term_idx, &(fx, fy, _))| MeasurementGroup {
                eval: term_idx.iter().map(|&i| (terms[i].coefficient, terms[i].support())).collect(),
                terms: term_idx,
                rot_x: fx,
                rot_y: fy,
            })
            .collect();
        Ok(PauliHamiltonian { terms, groups, n_qubits })
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn groups(&self) -> &[MeasurementGroup] {
        &self.groups
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Σ|g_α| over all terms.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }

    /// Text form: one `<coefficient> <letters>` line per term.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.terms {
            s.push_str(&t.to_string());
            s.push('\n');
        }
        s
    }

    /// Parses the text form; `#` starts a comment, blank lines are skipped.
    pub fn from_text(text: &str) -> Result<Self, QsimError> {
        let mut terms = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let term: PauliString = line
                .parse()
                .map_err(|e| QsimError::Parse { line: ln + 1, message: format!("{e}") })?;
            terms.push(term);
        }
        PauliHamiltonian::new(terms)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    /// |0…0⟩
    AllZero,
    /// |−⟩^⊗n (uniform superposition with alternating signs)
    AllMinusX,
    /// Explicit unit-norm amplitudes of length 2^n.
    Custom(Vec<Complex64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    /// Which circuit parameter drives this gate.
    pub param: usize,
    /// Mutually commuting generator terms G = Σ c_j P_j.
    pub generator: Vec<PauliString>,
}

/// Parameterized circuit |ψ(θ)⟩ = Π_gates exp(−iθ_{k} G) |ψ_0⟩ (gates listed
/// first apply first).
#[derive(Clone, Debug, PartialEq)]
pub struct ParamCircuit {
    n_qubits: usize,
    n_params: usize,
    initial: InitialState,
    gates: Vec<Gate>,
}

impl ParamCircuit {
    pub fn new(
        n_qubits: usize,
        n_params: usize,
        initial: InitialState,
        gates: Vec<Gate>,
    ) -> Result<Self, QsimError> {
        if n_qubits == 0 || n_qubits > 63 {
            return Err(QsimError::InvalidState(format!("n_qubits must be in 1..=63, got {n_qubits}")));
        }
        if let InitialState::Custom(amps) = &initial {
            if amps.len() != 1 << n_qubits {
                return Err(QsimError::InvalidState(format!(
                    "custom state has {} amplitudes, need {}",
                    amps.len(),
                    1usize << n_qubits
                )));
            }
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(QsimError::InvalidState(format!("custom state norm² = {norm}, need 1")));
            }
        }
        for (gi, gate) in gates.iter().enumerate() {
            if gate.param >= n_params {
                return Err(QsimError::SizeMismatch(format!(
                    "gate {gi} uses parameter {} but the circuit has {n_params}",
                    gate.param
                )));
            }
            if gate.generator.is_empty() {
                return Err(QsimError::InvalidState(format!("gate {gi} has an empty generator")));
            }
            for t in &gate.generator {
                if t.n_qubits != n_qubits {
                    return Err(QsimError::SizeMismatch(format!(
                        "gate {gi} term acts on {} qubits, circuit has {n_qubits}",
                        t.n_qubits
                    )));
                }
            }
            for a in 0..gate.generator.len() {
                for b in a + 1..gate.generator.len() {
                    if !gate.generator[a].commutes_with(&gate.generator[b]) {
                        return Err(QsimError::NonCommutingGenerator { gate: gi });
                    }
                }
            }
        }
        Ok(ParamCircuit { n_qubits, n_params, initial, gates })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn initial(&self) -> &InitialState {
        &self.initial
    }

    /// Text form (see `from_text` for the grammar). Custom initial states
    /// serialize their amplitudes as `amp <index> <re> <im>` lines.
    pub fn to_text(&self) -> String {
        let mut s = format!("qubits {}\nparams {}\n", self.n_qubits, self.n_params);
        match &self.initial {
            InitialState::AllZero => s.push_str("init all_zero\n"),
            InitialState::AllMinusX => s.push_str("init all_minus_x\n"),
            InitialState::Custom(amps) => {
                s.push_str("init custom\n");
                for (i, a) in amps.iter().enumerate() {
                    if a.re != 0.0 || a.im != 0.0 {
                        s.push_str(&format!("amp {} {} {}\n", i, a.re, a.im));
                    }
                }
            }
        }
        for g in &self.gates {
            let terms: Vec<String> = g.generator.iter().map(|t| t.to_string()).collect();
            s.push_str(&format!("gate {} {}\n", g.param, terms.join(", ")));
        }
        s
    }

    /// Parses the circuit grammar:
    /// ```text
    /// qubits <n>
    /// params <m>
    /// init all_zero | all_minus_x | custom
    /// amp <index> <re> <im>          # only after `init custom`
    /// gate <param> <coeff> <letters>[, <coeff> <letters>]...
    /// ```
    /// `#` comments and blank lines are allowed anywhere.
    pub fn from_text(text: &str) -> Result<Self, QsimError> {
        let mut n_qubits: Option<usize> = None;
        let mut n_params: Option<usize> = None;
        let mut init: Option<InitialState> = None;
        let mut amps: Vec<(usize, Complex64)> = Vec::new();
        let mut custom = false;
        let mut gates: Vec<Gate> = Vec::new();
        let err = |line: usize, message: String| QsimError::Parse { line, message };

        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let ln1 = ln + 1;
            let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match head {
                "qubits" => {
                    n_qubits =
                        Some(rest.parse().map_err(|_| err(ln1, format!("bad qubit count {rest:?}")))?)
                }
                "params" => {
                    n_params =
                        Some(rest.parse().map_err(|_| err(ln1, format!("bad param count {rest:?}")))?)
                }
                "init" => {
                    init = Some(match rest {
                        "all_zero" => InitialState::AllZero,
                        "all_minus_x" => InitialState::AllMinusX,
                        "custom" => {
                            custom = true;
                            InitialState::AllZero // placeholder until amps are read
                        }
                        other => return Err(err(ln1, format!("unknown initial state {other:?}"))),
                    })
                }
                "amp" => {
                    if !custom {
                        return Err(err(ln1, "amp line outside `init custom`".into()));
                    }
                    let parts: Vec<&str> = rest.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(err(ln1, "expected `amp <index> <re> <im>`".into()));
                    }
                    let idx: usize =
                        parts[0].parse().map_err(|_| err(ln1, format!("bad index {:?}", parts[0])))?;
                    let re: f64 =
                        parts[1].parse().map_err(|_| err(ln1, format!("bad real part {:?}", parts[1])))?;
                    let im: f64 =
                        parts[2].parse().map_err(|_| err(ln1, format!("bad imag part {:?}", parts[2])))?;
                    amps.push((idx, Complex64::new(re, im)));
                }
                "gate" => {
                    let (param, terms) = rest
                        .split_once(char::is_whitespace)
                        .ok_or_else(|| err(ln1, "expected `gate <param> <terms>`".into()))?;
                    let param: usize =
                        param.parse().map_err(|_| err(ln1, format!("bad param index {param:?}")))?;
                    let mut generator = Vec::new();
                    for part in terms.split(',') {
                        let term: PauliString = part
                            .trim()
                            .parse()
                            .map_err(|e| err(ln1, format!("{e}")))?;
                        generator.push(term);
                    }
                    gates.push(Gate { param, generator });
                }
                other => return Err(err(ln1, format!("unknown directive {other:?}"))),
            }
        }

        let n_qubits = n_qubits.ok_or_else(|| err(0, "missing `qubits` line".into()))?;
        let n_params = n_params.ok_or_else(|| err(0, "missing `params` line".into()))?;
        let mut initial = init.ok_or_else(|| err(0, "missing `init` line".into()))?;
        if custom {
            let mut v = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
            for (idx, a) in amps {
                if idx >= v.len() {
                    return Err(err(0, format!("amp index {idx} out of range")));
                }
                v[idx] = a;
            }
            initial = InitialState::Custom(v);
        }
        ParamCircuit::new(n_qubits, n_params, initial, gates)
    }
}

/// Complex statevector over 2^n basis states, qubit 0 = LSB.
pub type Statevector = Vec<Complex64>;

pub(crate) fn initial_statevector(circuit: &ParamCircuit) -> Statevector {
    let dim = 1usize << circuit.n_qubits;
    match &circuit.initial {
        InitialState::AllZero => {
            let mut v = vec![Complex64::new(0.0, 0.0); dim];
            v[0] = Complex64::new(1.0, 0.0);
            v
        }
        InitialState::AllMinusX => {
            let norm = 1.0 / (dim as f64).sqrt();
            (0..dim)
                .map(|b| {
                    let sign = if (b as u64).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    Complex64::new(sign * norm, 0.0)
                })
                .collect()
        }
        InitialState::Custom(amps) => amps.clone(),
    }
}

/// i^k
fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// In-place exp(−iφP)|ψ⟩.
///
/// P|b⟩ = i^{n_Y}(−1)^{popcount(b ∧ (Y∪Z))}|b ⊕ (X∪Y)⟩, so the rotation
/// mixes amplitude pairs (b, b⊕m) for m = X∪Y, or is diagonal when m = 0.
fn apply_pauli_rotation(state: &mut [Complex64], p: &PauliString, phi: f64) {
    let (c, s) = (phi.cos(), phi.sin());
    let flip = p.x_mask | p.y_mask;
    let phase_mask = p.y_mask | p.z_mask;
    let iny = i_pow(p.y_mask.count_ones());
    // −i sin φ · i^{n_Y}
    let ms = Complex64::new(0.0, -s) * iny;
    if flip == 0 {
        for (b, amp) in state.iter_mut().enumerate() {
            let sign = if (b as u64 & phase_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            // diagonal: exp(−iφ)·amp or exp(+iφ)·amp
            *amp *= Complex64::new(c, -s * sign);
        }
        return;
    }
    let hi = 1usize << (63 - flip.leading_zeros());
    for b in 0..state.len() {
        if b & hi != 0 {
            continue;
        }
        let b2 = b ^ flip as usize;
        let sign1 = if (b as u64 & phase_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        let sign2 = if (b2 as u64 & phase_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        let (a1, a2) = (state[b], state[b2]);
        state[b] = c * a1 + ms * sign2 * a2;
        state[b2] = c * a2 + ms * sign1 * a1;
    }
}

/// exp(−iθG)|ψ⟩ for G = Σ c_k P_k; the factors commute, so the product of
/// single-term rotations is exact.
pub(crate) fn apply_gate(state: &mut [Complex64], gate: &Gate, angle: f64) {
    for term in &gate.generator {
        apply_pauli_rotation(state, term, angle * term.coefficient);
    }
}

/// |ψ(θ)⟩ = Π exp(−iθ_k G)|ψ_0⟩.
pub fn prepare_state(circuit: &ParamCircuit, theta: &[f64]) -> Result<Statevector, QsimError> {
    if theta.len() != circuit.n_params {
        return Err(QsimError::SizeMismatch(format!(
            "got {} parameters, circuit has {}",
            theta.len(),
            circuit.n_params
        )));
    }
    let mut state = initial_statevector(circuit);
    for gate in &circuit.gates {
        apply_gate(&mut state, gate, theta[gate.param]);
    }
    Ok(state)
}

/// ⟨ψ|P|ψ⟩ (complex, for internal checks).
fn pauli_expectation(state: &[Complex64], p: &PauliString) -> Complex64 {
    let flip = (p.x_mask | p.y_mask) as usize;
    let phase_mask = p.y_mask | p.z_mask;
    let iny = i_pow(p.y_mask.count_ones());
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, amp) in state.iter().enumerate() {
        let sign = if (b as u64 & phase_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        // ⟨b⊕m| picks ψ[b⊕m] in the bra
        acc += state[b ^ flip].conj() * amp * sign;
    }
    acc * iny
}

/// Σ_α g_α ⟨ψ|P_α|ψ⟩. The imaginary part must vanish (Hermitian observable);
/// it is asserted below 1e−10 and discarded.
pub fn exact_expectation(state: &[Complex64], h: &PauliHamiltonian) -> Result<f64, QsimError> {
    if state.len() != 1 << h.n_qubits {
        return Err(QsimError::SizeMismatch(format!(
            "state has {} amplitudes, hamiltonian needs {}",
            state.len(),
            1usize << h.n_qubits
        )));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for t in &h.terms {
        total += t.coefficient * pauli_expectation(state, t);
    }
    if total.im.abs() > 1e-10 {
        return Err(QsimError::SizeMismatch(format!(
            "expectation has imaginary part {} (observable not Hermitian?)",
            total.im
        )));
    }
    Ok(total.re)
}

/// Rotates a copy of the state into the group's shared eigenbasis and
/// returns the Born probabilities over bitstrings.
fn group_probabilities(state: &[Complex64], group: &MeasurementGroup) -> Vec<f64> {
    let mut work = state.to_vec();
    let n = work.len().trailing_zeros() as usize;
    // S† on Y qubits: amp *= −i when the bit is 1
    if group.rot_y != 0 {
        for (b, amp) in work.iter_mut().enumerate() {
            let k = (b as u64 & group.rot_y).count_ones();
            *amp *= i_pow(3 * k); // (−i)^k
        }
    }
    // H on X and Y qubits
    let rot = group.rot_x | group.rot_y;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..n {
        if rot & (1 << k) == 0 {
            continue;
        }
        let bit = 1usize << k;
        for b in 0..work.len() {
            if b & bit != 0 {
                continue;
            }
            let (a0, a1) = (work[b], work[b | bit]);
            work[b] = (a0 + a1) * inv_sqrt2;
            work[b | bit] = (a0 - a1) * inv_sqrt2;
        }
    }
    work.iter().map(|a| a.norm_sqr()).collect()
}

/// Draws `s` projective shots of the group observable: each shot samples one
/// bitstring from the rotated state and sums every member term's eigenvalue.
pub fn sample_group<R: Rng + ?Sized>(
    state: &[Complex64],
    group: &MeasurementGroup,
    s: usize,
    rng: &mut R,
) -> Result<Vec<f64>, QsimError> {
    if s == 0 {
        return Err(QsimError::InvalidShots);
    }
    let probs = group_probabilities(state, group);
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }
    let total = acc;
    let mut out = Vec::with_capacity(s);
    for _ in 0..s {
        let u: f64 = rng.random::<f64>() * total;
        let idx = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
        out.push(group.value_on(idx as u64));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Projective sampling: per-shot group values, sample mean, standard
    /// error √(sample variance / s). All-identical shots report σ = 0.
    Realistic,
    /// Gaussian surrogate with the exact per-shot mean and variance of each
    /// group's outcome distribution.
    Gaussianized,
    /// No sampling: exact expectation, σ = 0, one "shot".
    Exact,
}

/// A cost estimate with its standard error and (optionally) the per-shot
/// total values õ_j = Σ_g value_{g,j}.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotEstimate {
    pub mean: f64,
    /// Standard error of the mean (0 when every shot coincides or Exact).
    pub sigma: f64,
    pub shots: usize,
    pub outcomes: Option<Vec<f64>>,
}

/// Estimates ⟨H⟩ at θ under the given noise model, charging `s_per_group`
/// shots to every measurement group.
pub fn estimate_cost<R: Rng + ?Sized>(
    circuit: &ParamCircuit,
    h: &PauliHamiltonian,
    theta: &[f64],
    s_per_group: usize,
    noise: NoiseModel,
    rng: &mut R,
) -> Result<ShotEstimate, QsimError> {
    estimate_cost_impl(circuit, h, theta, s_per_group, noise, rng, false)
}

/// As [`estimate_cost`] but keeps the per-shot total values.
pub fn estimate_cost_recorded<R: Rng + ?Sized>(
    circuit: &ParamCircuit,
    h: &PauliHamiltonian,
    theta: &[f64],
    s_per_group: usize,
    noise: NoiseModel,
    rng: &mut R,
) -> Result<ShotEstimate, QsimError> {
    estimate_cost_impl(circuit, h, theta, s_per_group, noise, rng, true)
}

fn estimate_cost_impl<R: Rng + ?Sized>(
    circuit: &ParamCircuit,
    h: &PauliHamiltonian,
    theta: &[f64],
    s_per_group: usize,
    noise: NoiseModel,
    rng: &mut R,
    record: bool,
) -> Result<ShotEstimate, QsimError> {
    let state = prepare_state(circuit, theta)?;
    if state.len() != 1 << h.n_qubits {
        return Err(QsimError::SizeMismatch(format!(
            "circuit has {} qubits, hamiltonian has {}",
            circuit.n_qubits, h.n_qubits
        )));
    }
    match noise {
        NoiseModel::Exact => {
            let mean = exact_expectation(&state, h)?;
            Ok(ShotEstimate { mean, sigma: 0.0, shots: 1, outcomes: record.then(|| vec![mean]) })
        }
        NoiseModel::Realistic => {
            if s_per_group == 0 {
                return Err(QsimError::InvalidShots);
            }
            let s = s_per_group;
            let mut mean = 0.0;
            let mut var_of_mean = 0.0;
            let mut outcomes = record.then(|| vec![0.0; s]);
            for group in &h.groups {
                let values = sample_group(&state, group, s, rng)?;
                mean += stats::mean(&values);
                var_of_mean += stats::sample_variance(&values) / s as f64;
                if let Some(o) = outcomes.as_mut() {
                    for (oj, v) in o.iter_mut().zip(&values) {
                        *oj += v;
                    }
                }
            }
            Ok(ShotEstimate { mean, sigma: var_of_mean.sqrt(), shots: s * h.groups.len(), outcomes })
        }
        NoiseModel::Gaussianized => {
            if s_per_group == 0 {
                return Err(QsimError::InvalidShots);
            }
            let s = s_per_group;
            let mut mean = 0.0;
            let mut var_of_mean = 0.0;
            let mut outcomes = record.then(|| vec![0.0; s]);
            for group in &h.groups {
                let probs = group_probabilities(&state, group);
                let mut mu = 0.0;
                let mut m2 = 0.0;
                for (b, p) in probs.iter().enumerate() {
                    let v = group.value_on(b as u64);
                    mu += p * v;
                    m2 += p * v * v;
                }
                let sd = (m2 - mu * mu).max(0.0).sqrt();
                let values: Vec<f64> = (0..s)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        mu + sd * z
                    })
                    .collect();
                mean += stats::mean(&values);
                var_of_mean += stats::sample_variance(&values) / s as f64;
                if let Some(o) = outcomes.as_mut() {
                    for (oj, v) in o.iter_mut().zip(&values) {
                        *oj += v;
                    }
                }
            }
            Ok(ShotEstimate { mean, sigma: var_of_mean.sqrt(), shots: s * h.groups.len(), outcomes })
        }
    }
}
