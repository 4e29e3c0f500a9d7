use nalgebra::DMatrix;
use num_complex::Complex64;
use quditbp::gates::all_generators;
use quditbp::linalg::kron;
use quditbp::{
    apply_layer, build_random_circuit, cnot_apply, cost, evolve, initial_state, partial_derivative,
    rotation_matrix, AnsatzLabel, AnsatzTemplate, Circuit, ComplexMatrix, ComplexVector,
    GateOrdering, Observable, ParamIndex, PureState, RotationGate,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn kron_all(ms: &[ComplexMatrix]) -> ComplexMatrix {
    let mut out = ms[0].clone();
    for m in &ms[1..] {
        out = kron(&out, m).unwrap();
    }
    out
}

fn shift(d: usize, power: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d).unwrap();
    for y in 0..d {
        m[((y + power) % d, y)] = c(1.0, 0.0);
    }
    m
}

fn level_projector(d: usize, x: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d).unwrap();
    m[(x, x)] = c(1.0, 0.0);
    m
}

/// `Σ_x P_x(control) ⊗ Shift^x(target)` padded with identities.
fn cnot_oracle(n: usize, d: usize, control: usize, target: usize) -> ComplexMatrix {
    let dim = d.pow(n as u32);
    let mut total = ComplexMatrix::zeros(dim, dim).unwrap();
    for x in 0..d {
        let factors: Vec<ComplexMatrix> = (0..n)
            .map(|s| {
                if s == control {
                    level_projector(d, x)
                } else if s == target {
                    shift(d, x)
                } else {
                    ComplexMatrix::identity(d).unwrap()
                }
            })
            .collect();
        total = total.add(&kron_all(&factors)).unwrap();
    }
    total
}

fn entangler_oracle(template: &AnsatzTemplate, n: usize, d: usize) -> ComplexMatrix {
    let mut w = ComplexMatrix::identity(d.pow(n as u32)).unwrap();
    for (ctl, tgt) in template.cnot_pairs(n) {
        w = cnot_oracle(n, d, ctl, tgt).matmul(&w).unwrap();
    }
    w
}

fn rotation_block(circuit: &Circuit, layer: usize) -> ComplexMatrix {
    let rs: Vec<ComplexMatrix> = circuit.layers()[layer]
        .rotations
        .iter()
        .map(rotation_matrix)
        .collect();
    kron_all(&rs)
}

fn layer_oracle(circuit: &Circuit, layer: usize) -> ComplexMatrix {
    let t = circuit.template();
    let w = entangler_oracle(&t, circuit.n(), circuit.qudit_dim());
    let r = rotation_block(circuit, layer);
    match t.ordering {
        GateOrdering::RotationsFirst => w.matmul(&r).unwrap(),
        GateOrdering::EntanglerFirst => r.matmul(&w).unwrap(),
    }
}

fn circuit_oracle(circuit: &Circuit) -> ComplexMatrix {
    let mut u = ComplexMatrix::identity(circuit.dim()).unwrap();
    for l in 0..circuit.depth() {
        u = layer_oracle(circuit, l).matmul(&u).unwrap();
    }
    u
}

fn random_state(n: usize, d: usize, rng: &mut ChaCha8Rng) -> PureState {
    let dim = d.pow(n as u32);
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    PureState::from_amplitudes(n, d, v).unwrap()
}

#[test]
fn strided_layer_matches_kron_built_layer() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for &(n, d) in &[
        (1usize, 2usize),
        (2, 2),
        (3, 2),
        (4, 2),
        (2, 3),
        (3, 3),
        (4, 3),
        (2, 4),
        (3, 4),
        (2, 5),
        (2, 9),
    ] {
        assert!(d.pow(n as u32) <= 81);
        for label in AnsatzLabel::ALL {
            let t = AnsatzTemplate::from_label(label);
            let circuit = build_random_circuit(t, n, d, 1, &mut rng).unwrap();
            let psi = random_state(n, d, &mut rng);
            let fast = apply_layer(&psi, &circuit.layers()[0], &t).unwrap();
            let dense = layer_oracle(&circuit, 0).apply(psi.amplitudes()).unwrap();
            assert!(
                fast.amplitudes().approx_eq(&dense, 1e-9),
                "n={n} d'={d} {label}"
            );
        }
    }
}

#[test]
fn cnot_matches_projector_shift_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for &(n, d) in &[(2, 2), (2, 3), (3, 3), (2, 5), (4, 2), (3, 4)] {
        for ctl in 0..n {
            for tgt in 0..n {
                if ctl == tgt {
                    continue;
                }
                let psi = random_state(n, d, &mut rng);
                let fast = cnot_apply(&psi, ctl, tgt).unwrap();
                let dense = cnot_oracle(n, d, ctl, tgt).apply(psi.amplitudes()).unwrap();
                assert!(fast.amplitudes().approx_eq(&dense, 1e-12));
            }
        }
    }
}

#[test]
fn evolve_matches_dense_circuit() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for label in AnsatzLabel::ALL {
        for &(n, d) in &[(2, 3), (3, 2), (3, 3)] {
            let circuit =
                build_random_circuit(AnsatzTemplate::from_label(label), n, d, 4, &mut rng).unwrap();
            let psi = initial_state(n, d).unwrap();
            let fast = evolve(&circuit, &psi).unwrap();
            let dense = circuit_oracle(&circuit).apply(psi.amplitudes()).unwrap();
            assert!(fast.amplitudes().approx_eq(&dense, 1e-9));
        }
    }
}

fn to_nalgebra(m: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |r, col| m[(r, col)])
}

#[test]
fn closed_form_rotation_matches_eigendecomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..500 {
        let d = rng.gen_range(2..=8);
        let gens = all_generators(d);
        let g = gens[rng.gen_range(0..gens.len())];
        let theta = rng.gen_range(-10.0..10.0);
        let eig = to_nalgebra(&g.matrix()).symmetric_eigen();
        let phases = eig
            .eigenvalues
            .map(|l| Complex64::from_polar(1.0, -theta * l / 2.0));
        let v = &eig.eigenvectors;
        let expm = v * DMatrix::from_diagonal(&phases) * v.adjoint();
        let closed = rotation_matrix(&RotationGate::new(g, theta));
        for r in 0..d {
            for col in 0..d {
                assert!(
                    (expm[(r, col)] - closed[(r, col)]).norm() < 1e-10,
                    "{g:?} theta={theta}"
                );
            }
        }
    }
}

/// `∂C = -(i/2) Tr(H [S, ρ])` with `ρ` the state after the differentiated
/// rotation block and `H` the observable pulled back through the rest.
fn commutator_derivative(circuit: &Circuit, obs: &ComplexMatrix, k: ParamIndex) -> f64 {
    let (n, d) = (circuit.n(), circuit.qudit_dim());
    let (site, layer) = (k.qudit - 1, k.layer - 1);
    let t = circuit.template();
    let w = entangler_oracle(&t, n, d);
    let mut before = ComplexMatrix::identity(circuit.dim()).unwrap();
    for l in 0..layer {
        before = layer_oracle(circuit, l).matmul(&before).unwrap();
    }
    if t.ordering == GateOrdering::EntanglerFirst {
        before = w.matmul(&before).unwrap();
    }
    before = rotation_block(circuit, layer).matmul(&before).unwrap();
    let mut after = ComplexMatrix::identity(circuit.dim()).unwrap();
    if t.ordering == GateOrdering::RotationsFirst {
        after = w.clone();
    }
    for l in layer + 1..circuit.depth() {
        after = layer_oracle(circuit, l).matmul(&after).unwrap();
    }
    let psi = before
        .apply(initial_state(n, d).unwrap().amplitudes())
        .unwrap();
    let rho = ComplexMatrix::outer(&psi).unwrap();
    let h = after.adjoint().matmul(obs).unwrap().matmul(&after).unwrap();
    let factors: Vec<ComplexMatrix> = (0..n)
        .map(|s| {
            if s == site {
                circuit.gate(layer, site).unwrap().generator.matrix()
            } else {
                ComplexMatrix::identity(d).unwrap()
            }
        })
        .collect();
    let s = kron_all(&factors);
    let comm = s
        .matmul(&rho)
        .unwrap()
        .sub(&rho.matmul(&s).unwrap())
        .unwrap();
    let z = h.matmul(&comm).unwrap().trace().unwrap() * c(0.0, -0.5);
    assert!(z.im.abs() < 1e-10);
    z.re
}

#[test]
fn tangent_derivative_matches_commutator_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for trial in 0..40 {
        let label = AnsatzLabel::ALL[trial % 4];
        let (n, d) = [(2, 2), (2, 3), (3, 2), (3, 3)][trial % 4];
        let depth = rng.gen_range(1..=4);
        let circuit =
            build_random_circuit(AnsatzTemplate::from_label(label), n, d, depth, &mut rng).unwrap();
        let dim = d.pow(n as u32);
        let mut h = ComplexMatrix::zeros(dim, dim).unwrap();
        for r in 0..dim {
            for col in r..dim {
                let z = if r == col {
                    c(rng.gen_range(-1.0..1.0), 0.0)
                } else {
                    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                };
                h[(r, col)] = z;
                h[(col, r)] = z.conj();
            }
        }
        let obs = Observable::dense(h.clone()).unwrap();
        let k = ParamIndex::new(rng.gen_range(1..=n), rng.gen_range(1..=depth));
        let fast = partial_derivative(&circuit, &obs, k).unwrap();
        let oracle = commutator_derivative(&circuit, &h, k);
        assert!(
            (fast - oracle).abs() < 1e-10,
            "trial {trial}: {fast} vs {oracle}"
        );
    }
}

#[test]
fn evolve_preserves_norm_over_random_circuits() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for i in 0..1000 {
        let label = AnsatzLabel::ALL[i % 4];
        let n = rng.gen_range(1..=4);
        let d = rng.gen_range(2..=4);
        let depth = rng.gen_range(1..=8);
        let circuit =
            build_random_circuit(AnsatzTemplate::from_label(label), n, d, depth, &mut rng).unwrap();
        let out = evolve(&circuit, &random_state(n, d, &mut rng)).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn cost_equals_dense_expectation() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let circuit = build_random_circuit(
        AnsatzTemplate::from_label(AnsatzLabel::C),
        3,
        3,
        5,
        &mut rng,
    )
    .unwrap();
    let o = Observable::global_zero_projector(3, 3).unwrap();
    let psi = circuit_oracle(&circuit)
        .apply(initial_state(3, 3).unwrap().amplitudes())
        .unwrap();
    let expected = psi.as_slice()[0].norm_sqr();
    assert!((cost(&circuit, &o).unwrap() - expected).abs() < 1e-12);
    let basis = ComplexVector::basis(0, 27).unwrap();
    assert!((basis.inner(&psi).norm_sqr() - expected).abs() < 1e-12);
}
