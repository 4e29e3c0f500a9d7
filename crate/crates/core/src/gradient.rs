//! Exact partial derivatives of the cost by tangent-state propagation, and a
//! central finite-difference cross-check.
//!
//! For the gate at `(q, p)` the derivative equals
//! `(i/2)·Tr[U_L† O U_L [U_R ρ U_R†, I ⊗ S]]` where `U_R` covers everything
//! up to and including that gate and `U_L` everything after it. With
//! `ρ = |ψ⟩⟨ψ|` this collapses to `2·Re⟨ψ_out|O|τ_out⟩`, where the tangent
//! `τ = −(i/2)(I ⊗ S)|ψ⟩` is branched off right after the gate and both
//! vectors are carried through the rest of the circuit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    check_observable, cost, initial_state, real_part, Circuit, GateOrdering, Observable, Register,
};
use crate::error::{Error, Result};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Position of one rotation angle, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamIndex {
    pub qudit: usize,
    pub layer: usize,
}

impl ParamIndex {
    pub fn new(qudit: usize, layer: usize) -> Self {
        Self { qudit, layer }
    }

    pub fn validate(&self, circuit: &Circuit) -> Result<()> {
        if self.qudit == 0
            || self.layer == 0
            || self.qudit > circuit.n()
            || self.layer > circuit.depth()
        {
            return Err(Error::Range(format!(
                "parameter (q={}, p={}) invalid for {} qudits and {} layers",
                self.qudit,
                self.layer,
                circuit.n(),
                circuit.depth()
            )));
        }
        Ok(())
    }
}

impl Default for ParamIndex {
    fn default() -> Self {
        first_parameter_index()
    }
}

/// `(q=1, p=1)`: the rotation on the first qudit of the first layer.
pub fn first_parameter_index() -> ParamIndex {
    ParamIndex { qudit: 1, layer: 1 }
}

/// Exact `∂C/∂θ_k` with `ρ = |0…0⟩⟨0…0|`.
pub fn partial_derivative(
    circuit: &Circuit,
    observable: &Observable,
    k: ParamIndex,
) -> Result<f64> {
    k.validate(circuit)?;
    check_observable(circuit, observable)?;
    let (n, d) = (circuit.n(), circuit.qudit_dim());
    let template = circuit.template();
    let (site, p) = (k.qudit - 1, k.layer - 1);

    let start = initial_state(n, d)?;
    let mut psi = Register::new(n, d, start.amplitudes().as_slice().to_vec());
    for layer in &circuit.layers()[..p] {
        psi.apply_layer(layer, &template);
    }

    let layer = &circuit.layers()[p];
    if template.ordering == GateOrdering::EntanglerFirst {
        psi.apply_entangler(&template);
    }
    for (s, gate) in layer.rotations.iter().enumerate().take(site + 1) {
        psi.apply_rotation(s, gate);
    }

    let generator = layer.rotations[site].generator.matrix();
    let factor = Complex64::new(0.0, -0.5);
    let scaled: Vec<Complex64> = generator.as_slice().iter().map(|z| z * factor).collect();
    let mut tangent = Register::new(n, d, psi.amps.clone());
    tangent.apply_site_matrix(site, &scaled);

    for (s, gate) in layer.rotations.iter().enumerate().skip(site + 1) {
        psi.apply_rotation(s, gate);
        tangent.apply_rotation(s, gate);
    }
    if template.ordering == GateOrdering::RotationsFirst {
        psi.apply_entangler(&template);
        tangent.apply_entangler(&template);
    }
    for layer in &circuit.layers()[p + 1..] {
        psi.apply_layer(layer, &template);
        tangent.apply_layer(layer, &template);
    }

    Ok(2.0 * observable.sandwich(&psi.amps, &tangent.amps).re)
}

/// Copy of `circuit` with the angle at `k` replaced.
pub fn with_angle(circuit: &Circuit, k: ParamIndex, angle: f64) -> Result<Circuit> {
    k.validate(circuit)?;
    let mut shifted = circuit.clone();
    shifted
        .gate_mut(k.layer - 1, k.qudit - 1)
        .expect("validated index")
        .angle = angle;
    Ok(shifted)
}

/// `(C(θ_k + h) − C(θ_k − h)) / 2h`.
pub fn finite_difference(
    circuit: &Circuit,
    observable: &Observable,
    k: ParamIndex,
    step: f64,
) -> Result<f64> {
    if step.is_nan() || step <= 0.0 {
        return Err(Error::Domain(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    k.validate(circuit)?;
    let theta = circuit
        .gate(k.layer - 1, k.qudit - 1)
        .expect("validated index")
        .angle;
    let plus = cost(&with_angle(circuit, k, theta + step)?, observable)?;
    let minus = cost(&with_angle(circuit, k, theta - step)?, observable)?;
    real_part(
        Complex64::new((plus - minus) / (2.0 * step), 0.0),
        "finite difference",
    )
}

/// Worst-case agreement between [`partial_derivative`] and [`finite_difference`]
/// over a batch of random circuits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub trials: usize,
    pub max_abs_diff: f64,
    pub max_abs_gradient: f64,
}

/// Random circuits with n ≤ 3, d' ≤ 4, L ≤ 10, templates cycling A–D and a
/// random parameter index, under the global zero projector.
pub fn gradcheck_suite(trials: usize, seed: u64, step: f64) -> Result<GradcheckReport> {
    use crate::circuit::{build_random_circuit, AnsatzLabel, AnsatzTemplate};
    use rand::Rng;
    use rayon::prelude::*;

    let pairs: Vec<(f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::seed::sample_rng(seed, i);
            let template = AnsatzTemplate::from_label(AnsatzLabel::ALL[i as usize % 4]);
            let n = rng.gen_range(1..=3);
            let d = rng.gen_range(2..=4);
            let depth = rng.gen_range(1..=10);
            let circuit = build_random_circuit(template, n, d, depth, &mut rng)?;
            let k = ParamIndex::new(rng.gen_range(1..=n), rng.gen_range(1..=depth));
            let observable = Observable::global_zero_projector(n, d)?;
            let exact = partial_derivative(&circuit, &observable, k)?;
            let fd = finite_difference(&circuit, &observable, k, step)?;
            Ok(((exact - fd).abs(), exact.abs()))
        })
        .collect::<Result<_>>()?;
    Ok(GradcheckReport {
        trials,
        max_abs_diff: pairs.iter().map(|p| p.0).fold(0.0, f64::max),
        max_abs_gradient: pairs.iter().map(|p| p.1).fold(0.0, f64::max),
    })
}
