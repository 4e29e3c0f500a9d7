//! Layered qudit ansätze, pure-state evolution and the expectation-value cost.
//!
//! Site 0 is the leading (most significant) tensor factor, so a basis index
//! is `Σ x_m · d'^(n-1-m)`. Single-qudit gates are applied by strided updates
//! of the amplitude vector; no `d × d` layer matrix is ever formed.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{
    self, random_generator, rotation_matrix, Axis, GellMannGenerator, RotationGate,
};
use crate::linalg::{self, ComplexMatrix, ComplexVector};

const NORM_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;
const IMAG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AnsatzLabel {
    A,
    B,
    C,
    D,
}

impl AnsatzLabel {
    pub const ALL: [AnsatzLabel; 4] = [
        AnsatzLabel::A,
        AnsatzLabel::B,
        AnsatzLabel::C,
        AnsatzLabel::D,
    ];
}

impl fmt::Display for AnsatzLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AnsatzLabel::A => "A",
            AnsatzLabel::B => "B",
            AnsatzLabel::C => "C",
            AnsatzLabel::D => "D",
        };
        f.write_str(s)
    }
}

impl FromStr for AnsatzLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(AnsatzLabel::A),
            "B" | "b" => Ok(AnsatzLabel::B),
            "C" | "c" => Ok(AnsatzLabel::C),
            "D" | "d" => Ok(AnsatzLabel::D),
            other => Err(Error::Config(format!(
                "unknown ansatz label {other:?} (expected A, B, C or D)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Entangler {
    /// CNOT(m, m+1) for neighbouring sites.
    Linear,
    /// CNOT(a, b) for every a < b.
    AllToAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateOrdering {
    RotationsFirst,
    EntanglerFirst,
}

/// Layout rule for one layer: which CNOT pattern, and whether it runs before
/// or after the rotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnsatzTemplate {
    pub label: AnsatzLabel,
    pub entangler: Entangler,
    pub ordering: GateOrdering,
}

impl AnsatzTemplate {
    /// Template for `label` under the default [`AnsatzMapping`].
    pub fn from_label(label: AnsatzLabel) -> Self {
        AnsatzMapping::default().template(label)
    }

    /// CNOT (control, target) pairs in application order.
    pub fn cnot_pairs(&self, n: usize) -> Vec<(usize, usize)> {
        match self.entangler {
            Entangler::Linear => (0..n.saturating_sub(1)).map(|m| (m, m + 1)).collect(),
            Entangler::AllToAll => {
                let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
                for a in 0..n {
                    for b in a + 1..n {
                        pairs.push((a, b));
                    }
                }
                pairs
            }
        }
    }
}

/// Assignment of the four labels to (entangler, ordering) combinations.
///
/// The default is A = (Linear, RotationsFirst), B = (Linear, EntanglerFirst),
/// C = (AllToAll, RotationsFirst), D = (AllToAll, EntanglerFirst).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzMapping {
    layouts: [(Entangler, GateOrdering); 4],
}

impl Default for AnsatzMapping {
    fn default() -> Self {
        Self {
            layouts: [
                (Entangler::Linear, GateOrdering::RotationsFirst),
                (Entangler::Linear, GateOrdering::EntanglerFirst),
                (Entangler::AllToAll, GateOrdering::RotationsFirst),
                (Entangler::AllToAll, GateOrdering::EntanglerFirst),
            ],
        }
    }
}

impl AnsatzMapping {
    /// Layouts for A, B, C, D in that order. A and B must use the linear
    /// entangler, C and D all-to-all, and all four must be distinct.
    pub fn new(layouts: [(Entangler, GateOrdering); 4]) -> Result<Self> {
        for (i, a) in layouts.iter().enumerate() {
            if layouts[i + 1..].contains(a) {
                return Err(Error::Config(
                    "ansatz layouts must be pairwise distinct".into(),
                ));
            }
        }
        let scopes_ok = layouts[..2].iter().all(|l| l.0 == Entangler::Linear)
            && layouts[2..].iter().all(|l| l.0 == Entangler::AllToAll);
        if !scopes_ok {
            return Err(Error::Config(
                "A and B must be Linear, C and D AllToAll".into(),
            ));
        }
        Ok(Self { layouts })
    }

    pub fn template(&self, label: AnsatzLabel) -> AnsatzTemplate {
        let (entangler, ordering) = self.layouts[label as usize];
        AnsatzTemplate {
            label,
            entangler,
            ordering,
        }
    }
}

/// A unit-norm register state of `n` qudits of dimension `qudit_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n: usize,
    qudit_dim: usize,
    amplitudes: ComplexVector,
}

impl PureState {
    pub fn from_amplitudes(n: usize, qudit_dim: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = register_dim(n, qudit_dim)?;
        if amplitudes.len() != dim {
            return Err(Error::Shape(format!(
                "{n} qudits of dimension {qudit_dim} need {dim} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        let amplitudes = ComplexVector::from_vec(amplitudes)?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Validation(format!("state norm {norm} is not 1")));
        }
        Ok(Self {
            n,
            qudit_dim,
            amplitudes,
        })
    }

    pub fn basis(n: usize, qudit_dim: usize, index: usize) -> Result<Self> {
        let dim = register_dim(n, qudit_dim)?;
        let amplitudes = ComplexVector::basis(index, dim)?;
        Ok(Self {
            n,
            qudit_dim,
            amplitudes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn qudit_dim(&self) -> usize {
        self.qudit_dim
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn approx_eq(&self, other: &PureState, tol: f64) -> bool {
        self.n == other.n
            && self.qudit_dim == other.qudit_dim
            && self.amplitudes.approx_eq(&other.amplitudes, tol)
    }

    // Unchecked: callers guarantee unitary evolution of a valid state.
    pub(crate) fn from_raw(n: usize, qudit_dim: usize, amps: Vec<Complex64>) -> Self {
        Self {
            n,
            qudit_dim,
            amplitudes: ComplexVector::from_vec(amps).expect("non-empty register"),
        }
    }
}

/// `d'^n`, checked against the amplitude cap.
pub fn register_dim(n: usize, qudit_dim: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::Shape("register needs at least one qudit".into()));
    }
    if qudit_dim < 2 {
        return Err(Error::Shape(format!(
            "qudit dimension must be at least 2, got {qudit_dim}"
        )));
    }
    let dim = linalg::checked_pow(qudit_dim, n)?;
    linalg::check_cap(dim)?;
    Ok(dim)
}

/// `|0…0⟩`.
pub fn initial_state(n: usize, qudit_dim: usize) -> Result<PureState> {
    PureState::basis(n, qudit_dim, 0)
}

#[derive(Debug, Clone, PartialEq)]
enum ObservableKind {
    Dense(ComplexMatrix),
    Projector(usize),
    Identity,
}

/// Hermitian observable on the full register, with `Tr[O]` and `Tr[O²]` cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    kind: ObservableKind,
    dim: usize,
    trace: f64,
    trace_sq: f64,
}

impl Observable {
    pub fn dense(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape(format!(
                "observable must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if !matrix.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::Validation("observable is not Hermitian".into()));
        }
        let trace = matrix.trace()?.re;
        // Tr[O²] = Σ |O_ij|² for Hermitian O.
        let trace_sq = matrix.as_slice().iter().map(|z| z.norm_sqr()).sum();
        Ok(Self {
            dim: matrix.rows(),
            kind: ObservableKind::Dense(matrix),
            trace,
            trace_sq,
        })
    }

    /// `|0…0⟩⟨0…0|` on the full register.
    pub fn global_zero_projector(n: usize, qudit_dim: usize) -> Result<Self> {
        Self::basis_projector(0, register_dim(n, qudit_dim)?)
    }

    pub fn basis_projector(index: usize, dim: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::Range(format!(
                "projector index {index} out of range for dimension {dim}"
            )));
        }
        Ok(Self {
            kind: ObservableKind::Projector(index),
            dim,
            trace: 1.0,
            trace_sq: 1.0,
        })
    }

    pub fn identity(n: usize, qudit_dim: usize) -> Result<Self> {
        let dim = register_dim(n, qudit_dim)?;
        Ok(Self {
            kind: ObservableKind::Identity,
            dim,
            trace: dim as f64,
            trace_sq: dim as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn trace_sq(&self) -> f64 {
        self.trace_sq
    }

    /// True when this is the rank-1 projector onto `|0…0⟩`.
    pub fn is_global_zero_projector(&self) -> bool {
        matches!(self.kind, ObservableKind::Projector(0))
    }

    pub fn matrix(&self) -> Result<ComplexMatrix> {
        match &self.kind {
            ObservableKind::Dense(m) => Ok(m.clone()),
            ObservableKind::Projector(i) => linalg::basis_projector(*i, self.dim),
            ObservableKind::Identity => ComplexMatrix::identity(self.dim),
        }
    }

    /// `⟨bra|O|ket⟩`.
    pub fn sandwich(&self, bra: &[Complex64], ket: &[Complex64]) -> Complex64 {
        debug_assert_eq!(bra.len(), self.dim);
        debug_assert_eq!(ket.len(), self.dim);
        match &self.kind {
            ObservableKind::Projector(i) => bra[*i].conj() * ket[*i],
            ObservableKind::Identity => bra
                .iter()
                .zip(ket)
                .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b),
            ObservableKind::Dense(m) => (0..self.dim).fold(Complex64::new(0.0, 0.0), |acc, r| {
                let row = m
                    .row(r)
                    .iter()
                    .zip(ket)
                    .fold(Complex64::new(0.0, 0.0), |s, (a, b)| s + a * b);
                acc + bra[r].conj() * row
            }),
        }
    }

    /// `α·self + β·other` for real coefficients, as a dense observable.
    pub fn linear_combination(&self, alpha: f64, other: &Observable, beta: f64) -> Result<Self> {
        let a = self.matrix()?.scale(Complex64::new(alpha, 0.0));
        let b = other.matrix()?.scale(Complex64::new(beta, 0.0));
        Self::dense(a.add(&b)?)
    }
}

/// The `n` rotations of one layer, site 0 first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub rotations: Vec<RotationGate>,
}

/// A layered ansatz: `L` layers of per-qudit rotations plus the template's CNOT pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    template: AnsatzTemplate,
    n: usize,
    qudit_dim: usize,
    layers: Vec<Layer>,
    seed: Option<u64>,
}

impl Circuit {
    pub fn new(
        template: AnsatzTemplate,
        n: usize,
        qudit_dim: usize,
        layers: Vec<Layer>,
    ) -> Result<Self> {
        register_dim(n, qudit_dim)?;
        for (l, layer) in layers.iter().enumerate() {
            if layer.rotations.len() != n {
                return Err(Error::Shape(format!(
                    "layer {} has {} rotations, expected {n}",
                    l + 1,
                    layer.rotations.len()
                )));
            }
            if let Some(g) = layer.rotations.iter().find(|g| g.qudit_dim() != qudit_dim) {
                return Err(Error::Shape(format!(
                    "layer {} holds a gate of dimension {}, expected {qudit_dim}",
                    l + 1,
                    g.qudit_dim()
                )));
            }
        }
        Ok(Self {
            template,
            n,
            qudit_dim,
            layers,
            seed: None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn template(&self) -> AnsatzTemplate {
        self.template
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn qudit_dim(&self) -> usize {
        self.qudit_dim
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn param_count(&self) -> usize {
        self.n * self.layers.len()
    }

    pub fn dim(&self) -> usize {
        self.qudit_dim.pow(self.n as u32)
    }

    /// Gate at 0-based (layer, site).
    pub fn gate(&self, layer: usize, site: usize) -> Option<&RotationGate> {
        self.layers.get(layer).and_then(|l| l.rotations.get(site))
    }

    pub(crate) fn gate_mut(&mut self, layer: usize, site: usize) -> Option<&mut RotationGate> {
        self.layers
            .get_mut(layer)
            .and_then(|l| l.rotations.get_mut(site))
    }

    pub fn description(&self) -> CircuitDescription {
        let mut gates = Vec::with_capacity(self.param_count());
        for (l, layer) in self.layers.iter().enumerate() {
            for (q, g) in layer.rotations.iter().enumerate() {
                gates.push(GateRecord {
                    layer: l + 1,
                    qudit: q + 1,
                    axis: g.generator.axis(),
                    j: g.generator.j(),
                    k: g.generator.k(),
                    theta: g.angle,
                });
            }
        }
        CircuitDescription {
            template: self.template.label,
            entangler: self.template.entangler,
            ordering: self.template.ordering,
            n: self.n,
            d_prime: self.qudit_dim,
            layers: self.layers.len(),
            seed: self.seed,
            gates,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.description())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let desc: CircuitDescription = serde_json::from_str(s)?;
        desc.into_circuit()
    }
}

/// Serializable provenance record of a circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitDescription {
    pub template: AnsatzLabel,
    pub entangler: Entangler,
    pub ordering: GateOrdering,
    pub n: usize,
    pub d_prime: usize,
    pub layers: usize,
    pub seed: Option<u64>,
    pub gates: Vec<GateRecord>,
}

/// One rotation gate; `layer` and `qudit` are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateRecord {
    pub layer: usize,
    pub qudit: usize,
    pub axis: Axis,
    pub j: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub theta: f64,
}

impl CircuitDescription {
    pub fn into_circuit(self) -> Result<Circuit> {
        if self.gates.len() != self.n * self.layers {
            return Err(Error::Shape(format!(
                "description lists {} gates, expected {}",
                self.gates.len(),
                self.n * self.layers
            )));
        }
        let mut slots: Vec<Vec<Option<RotationGate>>> = vec![vec![None; self.n]; self.layers];
        for g in &self.gates {
            if g.layer == 0 || g.layer > self.layers || g.qudit == 0 || g.qudit > self.n {
                return Err(Error::Range(format!(
                    "gate position ({}, {}) out of range",
                    g.qudit, g.layer
                )));
            }
            let slot = &mut slots[g.layer - 1][g.qudit - 1];
            if slot.is_some() {
                return Err(Error::Shape(format!(
                    "duplicate gate at ({}, {})",
                    g.qudit, g.layer
                )));
            }
            let gen = GellMannGenerator::new(g.axis, g.j, g.k, self.d_prime)?;
            *slot = Some(RotationGate::new(gen, g.theta));
        }
        let layers = slots
            .into_iter()
            .map(|row| Layer {
                rotations: row
                    .into_iter()
                    .map(|g| g.expect("all slots filled"))
                    .collect(),
            })
            .collect();
        let template = AnsatzTemplate {
            label: self.template,
            entangler: self.entangler,
            ordering: self.ordering,
        };
        let circuit = Circuit::new(template, self.n, self.d_prime, layers)?;
        Ok(match self.seed {
            Some(s) => circuit.with_seed(s),
            None => circuit,
        })
    }
}

/// Random ansatz: every generator drawn with [`random_generator`], every angle uniform on `[0, 2π)`.
pub fn build_random_circuit<R: Rng + ?Sized>(
    template: AnsatzTemplate,
    n: usize,
    qudit_dim: usize,
    depth: usize,
    rng: &mut R,
) -> Result<Circuit> {
    if n == 0 || depth == 0 || qudit_dim < 2 {
        return Err(Error::Config(format!(
            "random circuits need n >= 1, L >= 1, d' >= 2 (got n={n}, L={depth}, d'={qudit_dim})"
        )));
    }
    register_dim(n, qudit_dim)?;
    let mut layers = Vec::with_capacity(depth);
    for _ in 0..depth {
        let mut rotations = Vec::with_capacity(n);
        for _ in 0..n {
            let gen = random_generator(rng, qudit_dim)?;
            let angle = rng.gen_range(0.0..TAU);
            rotations.push(RotationGate::new(gen, angle));
        }
        layers.push(Layer { rotations });
    }
    Circuit::new(template, n, qudit_dim, layers)
}

/// Mutable amplitude buffer plus scratch space for in-place gate application.
pub(crate) struct Register {
    pub n: usize,
    pub qudit_dim: usize,
    pub amps: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Register {
    pub fn new(n: usize, qudit_dim: usize, amps: Vec<Complex64>) -> Self {
        let scratch = vec![Complex64::new(0.0, 0.0); amps.len()];
        Self {
            n,
            qudit_dim,
            amps,
            scratch,
        }
    }

    /// Applies a dense `d' × d'` matrix (row-major) on one site.
    pub fn apply_site_matrix(&mut self, site: usize, m: &[Complex64]) {
        let d = self.qudit_dim;
        let stride = gates::site_stride(self.n, d, site);
        let block = stride * d;
        let mut local = [Complex64::new(0.0, 0.0); 16];
        let mut heap;
        let buf: &mut [Complex64] = if d <= 16 {
            &mut local[..d]
        } else {
            heap = vec![Complex64::new(0.0, 0.0); d];
            &mut heap
        };
        for base in (0..self.amps.len()).step_by(block) {
            for inner in 0..stride {
                let start = base + inner;
                for (a, slot) in buf.iter_mut().enumerate() {
                    *slot = self.amps[start + a * stride];
                }
                for r in 0..d {
                    let row = &m[r * d..(r + 1) * d];
                    let v = row
                        .iter()
                        .zip(buf.iter())
                        .fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x * y);
                    self.amps[start + r * stride] = v;
                }
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        gates::cnot_in_place(
            &mut self.amps,
            &mut self.scratch,
            self.n,
            self.qudit_dim,
            control,
            target,
        );
    }

    pub fn apply_entangler(&mut self, template: &AnsatzTemplate) {
        for (c, t) in template.cnot_pairs(self.n) {
            self.apply_cnot(c, t);
        }
    }

    pub fn apply_rotation(&mut self, site: usize, gate: &RotationGate) {
        let m = rotation_matrix(gate);
        self.apply_site_matrix(site, m.as_slice());
    }

    /// Rotations then/after entangler per the template ordering.
    pub fn apply_layer(&mut self, layer: &Layer, template: &AnsatzTemplate) {
        if template.ordering == GateOrdering::EntanglerFirst {
            self.apply_entangler(template);
        }
        for (site, gate) in layer.rotations.iter().enumerate() {
            self.apply_rotation(site, gate);
        }
        if template.ordering == GateOrdering::RotationsFirst {
            self.apply_entangler(template);
        }
    }
}

fn check_state(n: usize, qudit_dim: usize, state: &PureState) -> Result<()> {
    if state.n != n || state.qudit_dim != qudit_dim {
        return Err(Error::Shape(format!(
            "state has {} qudits of dimension {}, circuit expects {n} of dimension {qudit_dim}",
            state.n, state.qudit_dim
        )));
    }
    Ok(())
}

/// Applies one layer (rotations and CNOT pattern) to `state`.
pub fn apply_layer(
    state: &PureState,
    layer: &Layer,
    template: &AnsatzTemplate,
) -> Result<PureState> {
    let (n, d) = (state.n, state.qudit_dim);
    if layer.rotations.len() != n {
        return Err(Error::Shape(format!(
            "layer has {} rotations for {n} qudits",
            layer.rotations.len()
        )));
    }
    if layer.rotations.iter().any(|g| g.qudit_dim() != d) {
        return Err(Error::Shape(
            "layer gate dimension differs from state".into(),
        ));
    }
    let mut reg = Register::new(n, d, state.amplitudes.as_slice().to_vec());
    reg.apply_layer(layer, template);
    Ok(PureState::from_raw(n, d, reg.amps))
}

/// Applies layers 1…L in order.
pub fn evolve(circuit: &Circuit, state: &PureState) -> Result<PureState> {
    check_state(circuit.n, circuit.qudit_dim, state)?;
    let mut reg = Register::new(
        circuit.n,
        circuit.qudit_dim,
        state.amplitudes.as_slice().to_vec(),
    );
    for layer in &circuit.layers {
        reg.apply_layer(layer, &circuit.template);
    }
    Ok(PureState::from_raw(circuit.n, circuit.qudit_dim, reg.amps))
}

pub(crate) fn real_part(z: Complex64, what: &str) -> Result<f64> {
    if z.im.abs() > IMAG_TOL {
        return Err(Error::Validation(format!(
            "{what} has imaginary part {}",
            z.im
        )));
    }
    Ok(z.re)
}

pub(crate) fn check_observable(circuit: &Circuit, observable: &Observable) -> Result<()> {
    if observable.dim != circuit.dim() {
        return Err(Error::Shape(format!(
            "observable dimension {} does not match register dimension {}",
            observable.dim,
            circuit.dim()
        )));
    }
    Ok(())
}

/// `⟨ψ|O|ψ⟩` for `|ψ⟩ = U|0…0⟩`.
pub fn cost(circuit: &Circuit, observable: &Observable) -> Result<f64> {
    check_observable(circuit, observable)?;
    let out = evolve(circuit, &initial_state(circuit.n, circuit.qudit_dim)?)?;
    let amps = out.amplitudes.as_slice();
    real_part(observable.sandwich(amps, amps), "cost")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn template(label: AnsatzLabel) -> AnsatzTemplate {
        AnsatzTemplate::from_label(label)
    }

    #[test]
    fn default_mapping() {
        let m = AnsatzMapping::default();
        assert_eq!(m.template(AnsatzLabel::A).entangler, Entangler::Linear);
        assert_eq!(
            m.template(AnsatzLabel::B).ordering,
            GateOrdering::EntanglerFirst
        );
        assert_eq!(m.template(AnsatzLabel::C).entangler, Entangler::AllToAll);
        assert_eq!(
            m.template(AnsatzLabel::D).ordering,
            GateOrdering::EntanglerFirst
        );
        assert!(AnsatzMapping::new([
            (Entangler::Linear, GateOrdering::RotationsFirst),
            (Entangler::Linear, GateOrdering::RotationsFirst),
            (Entangler::AllToAll, GateOrdering::RotationsFirst),
            (Entangler::AllToAll, GateOrdering::EntanglerFirst),
        ])
        .is_err());
        let swapped = AnsatzMapping::new([
            (Entangler::Linear, GateOrdering::EntanglerFirst),
            (Entangler::Linear, GateOrdering::RotationsFirst),
            (Entangler::AllToAll, GateOrdering::EntanglerFirst),
            (Entangler::AllToAll, GateOrdering::RotationsFirst),
        ])
        .unwrap();
        assert_eq!(
            swapped.template(AnsatzLabel::A).ordering,
            GateOrdering::EntanglerFirst
        );
    }

    #[test]
    fn cnot_patterns() {
        assert_eq!(
            template(AnsatzLabel::A).cnot_pairs(4),
            vec![(0, 1), (1, 2), (2, 3)]
        );
        assert_eq!(
            template(AnsatzLabel::C).cnot_pairs(3),
            vec![(0, 1), (0, 2), (1, 2)]
        );
        assert!(template(AnsatzLabel::D).cnot_pairs(1).is_empty());
    }

    #[test]
    fn random_circuit_counts_and_determinism() {
        let t = template(AnsatzLabel::B);
        let c1 = build_random_circuit(t, 3, 2, 10, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(c1.param_count(), 30);
        assert_eq!(
            c1.layers().iter().map(|l| l.rotations.len()).sum::<usize>(),
            30
        );
        let c2 = build_random_circuit(t, 3, 2, 10, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(c1, c2);
        assert!(build_random_circuit(t, 0, 2, 10, &mut ChaCha8Rng::seed_from_u64(5)).is_err());
        assert!(build_random_circuit(t, 2, 2, 0, &mut ChaCha8Rng::seed_from_u64(5)).is_err());
    }

    #[test]
    fn random_circuit_z_gates_have_no_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for i in 0..1000 {
            let d = 2 + i % 4;
            let c = build_random_circuit(template(AnsatzLabel::C), 2, d, 3, &mut rng).unwrap();
            for layer in c.layers() {
                for g in &layer.rotations {
                    assert_eq!(g.generator.k().is_none(), g.generator.axis() == Axis::Z);
                    assert!((0.0..TAU).contains(&g.angle));
                }
            }
        }
    }

    #[test]
    fn register_dim_cap() {
        linalg::set_dim_cap(linalg::DEFAULT_DIM_CAP);
        assert!(matches!(
            register_dim(30, 5),
            Err(Error::DimensionCap { .. })
        ));
        assert!(matches!(
            build_random_circuit(
                template(AnsatzLabel::A),
                12,
                8,
                1,
                &mut ChaCha8Rng::seed_from_u64(1)
            ),
            Err(Error::DimensionCap { .. })
        ));
    }

    #[test]
    fn initial_states() {
        let s = initial_state(1, 2).unwrap();
        assert_eq!(
            s.amplitudes().as_slice(),
            &[Complex64::new(1., 0.), Complex64::new(0., 0.)]
        );
        let s = initial_state(2, 3).unwrap();
        assert_eq!(s.dim(), 9);
        assert_eq!(s.amplitudes()[0], Complex64::new(1., 0.));
        assert_eq!(s.norm(), 1.0);
    }

    #[test]
    fn identity_layer_keeps_zero_state() {
        let gen = GellMannGenerator::x(1, 2, 2).unwrap();
        let layer = Layer {
            rotations: vec![RotationGate::new(gen, 0.0); 2],
        };
        let s = initial_state(2, 2).unwrap();
        let out = apply_layer(&s, &layer, &template(AnsatzLabel::A)).unwrap();
        assert!(out.approx_eq(&s, 0.0));
    }

    #[test]
    fn single_qubit_x_pi() {
        let gen = GellMannGenerator::x(1, 2, 2).unwrap();
        let layer = Layer {
            rotations: vec![RotationGate::new(gen, PI)],
        };
        let out = apply_layer(
            &initial_state(1, 2).unwrap(),
            &layer,
            &template(AnsatzLabel::C),
        )
        .unwrap();
        let expected =
            PureState::from_amplitudes(1, 2, vec![Complex64::new(0., 0.), Complex64::new(0., -1.)])
                .unwrap();
        assert!(out.approx_eq(&expected, 1e-15));
    }

    #[test]
    fn layer_shape_mismatch() {
        let gen = GellMannGenerator::x(1, 2, 3).unwrap();
        let layer = Layer {
            rotations: vec![RotationGate::new(gen, 0.1)],
        };
        let s = initial_state(2, 3).unwrap();
        assert!(matches!(
            apply_layer(&s, &layer, &template(AnsatzLabel::A)),
            Err(Error::Shape(_))
        ));
        let s = initial_state(1, 2).unwrap();
        assert!(matches!(
            apply_layer(&s, &layer, &template(AnsatzLabel::A)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn layers_preserve_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for i in 0..1000 {
            let d = 2 + i % 4;
            let n = 1 + i % 3;
            let c =
                build_random_circuit(template(AnsatzLabel::ALL[i % 4]), n, d, 1, &mut rng).unwrap();
            let s =
                apply_layer(&initial_state(n, d).unwrap(), &c.layers()[0], &c.template()).unwrap();
            assert!((s.norm() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn empty_circuit() {
        let c = Circuit::new(template(AnsatzLabel::A), 2, 3, vec![]).unwrap();
        let s = PureState::basis(2, 3, 4).unwrap();
        assert_eq!(evolve(&c, &s).unwrap(), s);
        let o = Observable::global_zero_projector(2, 3).unwrap();
        assert_eq!(cost(&c, &o).unwrap(), 1.0);
    }

    #[test]
    fn rotation_only_inversion() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let c = build_random_circuit(template(AnsatzLabel::A), 3, 3, 6, &mut rng).unwrap();
        let start = initial_state(3, 3).unwrap();
        let mut reg = Register::new(3, 3, start.amplitudes().as_slice().to_vec());
        for layer in c.layers() {
            for (site, g) in layer.rotations.iter().enumerate() {
                reg.apply_rotation(site, g);
            }
        }
        for layer in c.layers().iter().rev() {
            for (site, g) in layer.rotations.iter().enumerate() {
                reg.apply_rotation(site, &RotationGate::new(g.generator, -g.angle));
            }
        }
        let back = PureState::from_raw(3, 3, reg.amps);
        assert!(back.approx_eq(&start, 1e-9));
    }

    #[test]
    fn cost_examples() {
        let gen = GellMannGenerator::x(1, 2, 2).unwrap();
        let c = Circuit::new(
            template(AnsatzLabel::A),
            1,
            2,
            vec![Layer {
                rotations: vec![RotationGate::new(gen, PI)],
            }],
        )
        .unwrap();
        let o = Observable::global_zero_projector(1, 2).unwrap();
        assert!(cost(&c, &o).unwrap().abs() <= 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = build_random_circuit(template(AnsatzLabel::D), 3, 3, 4, &mut rng).unwrap();
        assert!((cost(&c, &Observable::identity(3, 3).unwrap()).unwrap() - 1.0).abs() <= 1e-12);
        let p = cost(&c, &Observable::global_zero_projector(3, 3).unwrap()).unwrap();
        assert!((-1e-10..=1.0 + 1e-10).contains(&p));
        let dense = Observable::dense(linalg::basis_projector(0, 27).unwrap()).unwrap();
        assert!((cost(&c, &dense).unwrap() - p).abs() <= 1e-12);
    }

    #[test]
    fn non_hermitian_observable_rejected() {
        let mut m = ComplexMatrix::zeros(2, 2).unwrap();
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(Observable::dense(m), Err(Error::Validation(_))));
    }

    #[test]
    fn observable_dimension_mismatch() {
        let c = Circuit::new(template(AnsatzLabel::A), 2, 2, vec![]).unwrap();
        let o = Observable::global_zero_projector(2, 3).unwrap();
        assert!(matches!(cost(&c, &o), Err(Error::Shape(_))));
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let c = build_random_circuit(template(AnsatzLabel::C), 3, 4, 2, &mut rng)
            .unwrap()
            .with_seed(10);
        let json = c.to_json().unwrap();
        let back = Circuit::from_json(&json).unwrap();
        assert_eq!(back, c);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["template"], "C");
        assert_eq!(v["d_prime"], 4);
        assert_eq!(v["gates"].as_array().unwrap().len(), 6);
    }
}
