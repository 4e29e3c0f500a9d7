//! Generalized Gell-Mann generators, their rotation gates, and the qudit CNOT.
//!
//! Generator indices `j`, `k` are 1-based labels as in the usual Gell-Mann
//! notation; label `m` addresses amplitude `m - 1`. With this mapping the
//! `d' = 2` generators are exactly the Pauli matrices.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::PureState;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        };
        f.write_str(s)
    }
}

/// One generalized Gell-Mann matrix `S_x^{jk}`, `S_y^{jk}` or `S_z^{j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GellMannGenerator {
    axis: Axis,
    j: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    k: Option<usize>,
    qudit_dim: usize,
}

impl GellMannGenerator {
    pub fn new(axis: Axis, j: usize, k: Option<usize>, qudit_dim: usize) -> Result<Self> {
        if qudit_dim < 2 {
            return Err(Error::Generator(format!(
                "qudit dimension must be at least 2, got {qudit_dim}"
            )));
        }
        match (axis, k) {
            (Axis::X | Axis::Y, Some(k)) => {
                if !(1 <= j && j < k && k <= qudit_dim) {
                    return Err(Error::Generator(format!(
                        "{axis} generator needs 1 <= j < k <= {qudit_dim}, got j={j}, k={k}"
                    )));
                }
            }
            (Axis::X | Axis::Y, None) => {
                return Err(Error::Generator(format!(
                    "{axis} generator needs a k index"
                )));
            }
            (Axis::Z, None) => {
                if !(1 <= j && j < qudit_dim) {
                    return Err(Error::Generator(format!(
                        "Z generator needs 1 <= j <= {}, got j={j}",
                        qudit_dim - 1
                    )));
                }
            }
            (Axis::Z, Some(_)) => {
                return Err(Error::Generator("Z generator takes no k index".into()));
            }
        }
        Ok(Self {
            axis,
            j,
            k,
            qudit_dim,
        })
    }

    pub fn x(j: usize, k: usize, qudit_dim: usize) -> Result<Self> {
        Self::new(Axis::X, j, Some(k), qudit_dim)
    }

    pub fn y(j: usize, k: usize, qudit_dim: usize) -> Result<Self> {
        Self::new(Axis::Y, j, Some(k), qudit_dim)
    }

    pub fn z(j: usize, qudit_dim: usize) -> Result<Self> {
        Self::new(Axis::Z, j, None, qudit_dim)
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn k(&self) -> Option<usize> {
        self.k
    }

    pub fn qudit_dim(&self) -> usize {
        self.qudit_dim
    }

    /// Diagonal of `S_z^j` (only meaningful for the Z axis).
    fn z_diagonal(&self) -> Vec<f64> {
        let j = self.j as f64;
        let norm = (2.0 / (j * (j + 1.0))).sqrt();
        let mut diag = vec![0.0; self.qudit_dim];
        for entry in diag.iter_mut().take(self.j) {
            *entry = norm;
        }
        diag[self.j] = -j * norm;
        diag
    }

    /// Dense `d' × d'` matrix of the generator.
    pub fn matrix(&self) -> ComplexMatrix {
        let d = self.qudit_dim;
        let mut m = ComplexMatrix::zeros(d, d).expect("generator dimension within cap");
        match (self.axis, self.k) {
            (Axis::X, Some(k)) => {
                m[(self.j - 1, k - 1)] = Complex64::new(1.0, 0.0);
                m[(k - 1, self.j - 1)] = Complex64::new(1.0, 0.0);
            }
            (Axis::Y, Some(k)) => {
                m[(self.j - 1, k - 1)] = Complex64::new(0.0, -1.0);
                m[(k - 1, self.j - 1)] = Complex64::new(0.0, 1.0);
            }
            _ => {
                for (i, v) in self.z_diagonal().into_iter().enumerate() {
                    m[(i, i)] = Complex64::new(v, 0.0);
                }
            }
        }
        m
    }
}

impl fmt::Display for GellMannGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.k {
            Some(k) => write!(
                f,
                "S_{}^({},{}) [d'={}]",
                self.axis, self.j, k, self.qudit_dim
            ),
            None => write!(f, "S_{}^({}) [d'={}]", self.axis, self.j, self.qudit_dim),
        }
    }
}

pub fn gell_mann_matrix(gen: &GellMannGenerator) -> ComplexMatrix {
    gen.matrix()
}

/// `exp(-i θ S / 2)` for a Gell-Mann generator `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationGate {
    pub generator: GellMannGenerator,
    pub angle: f64,
}

impl RotationGate {
    pub fn new(generator: GellMannGenerator, angle: f64) -> Self {
        Self { generator, angle }
    }

    pub fn qudit_dim(&self) -> usize {
        self.generator.qudit_dim
    }

    pub fn matrix(&self) -> ComplexMatrix {
        rotation_matrix(self)
    }
}

/// Closed-form rotation matrix.
///
/// For X/Y generators `S²` is the projector onto `span{|j⟩, |k⟩}`, so
/// `R = I + (cos(θ/2) − 1)·S² − i·sin(θ/2)·S`. Z generators are diagonal and
/// exponentiate entry-wise.
pub fn rotation_matrix(gate: &RotationGate) -> ComplexMatrix {
    let gen = &gate.generator;
    let d = gen.qudit_dim;
    let half = gate.angle / 2.0;
    match gen.k {
        Some(k) => {
            let mut r = ComplexMatrix::identity(d).expect("generator dimension within cap");
            let (a, b) = (gen.j - 1, k - 1);
            let (s, c) = half.sin_cos();
            r[(a, a)] = Complex64::new(c, 0.0);
            r[(b, b)] = Complex64::new(c, 0.0);
            // -i·sin·S off-diagonal entries
            let (ab, ba) = match gen.axis {
                Axis::X => (Complex64::new(0.0, -s), Complex64::new(0.0, -s)),
                _ => (Complex64::new(-s, 0.0), Complex64::new(s, 0.0)),
            };
            r[(a, b)] = ab;
            r[(b, a)] = ba;
            r
        }
        None => {
            let diag: Vec<Complex64> = gen
                .z_diagonal()
                .into_iter()
                .map(|v| Complex64::from_polar(1.0, -half * v))
                .collect();
            ComplexMatrix::from_diag(&diag).expect("generator dimension within cap")
        }
    }
}

/// Two-qudit CNOT `|x⟩|y⟩ → |x⟩|x + y mod d'⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuditCnot {
    pub qudit_dim: usize,
}

impl QuditCnot {
    /// `d'² × d'²` permutation matrix with the control as the leading factor.
    pub fn matrix(&self) -> Result<ComplexMatrix> {
        let d = self.qudit_dim;
        let mut m = ComplexMatrix::zeros(d * d, d * d)?;
        for x in 0..d {
            for y in 0..d {
                m[(x * d + (x + y) % d, x * d + y)] = Complex64::new(1.0, 0.0);
            }
        }
        Ok(m)
    }
}

/// Stride of site `site` (0-based, site 0 most significant) in an `n`-site register.
pub(crate) fn site_stride(n: usize, qudit_dim: usize, site: usize) -> usize {
    qudit_dim.pow((n - 1 - site) as u32)
}

/// In-place CNOT permutation on raw amplitudes. `scratch` must match `amps` in length.
pub(crate) fn cnot_in_place(
    amps: &mut [Complex64],
    scratch: &mut [Complex64],
    n: usize,
    qudit_dim: usize,
    control: usize,
    target: usize,
) {
    let cs = site_stride(n, qudit_dim, control);
    let ts = site_stride(n, qudit_dim, target);
    scratch.copy_from_slice(amps);
    for (idx, &amp) in scratch.iter().enumerate() {
        let x = (idx / cs) % qudit_dim;
        if x == 0 {
            continue;
        }
        let y = (idx / ts) % qudit_dim;
        let y_new = (x + y) % qudit_dim;
        let dst = idx - y * ts + y_new * ts;
        amps[dst] = amp;
    }
}

pub(crate) fn check_sites(n: usize, control: usize, target: usize) -> Result<()> {
    if control == target {
        return Err(Error::Site(format!(
            "control and target are both site {control}"
        )));
    }
    if control >= n || target >= n {
        return Err(Error::Site(format!(
            "sites ({control}, {target}) out of range for {n} qudits"
        )));
    }
    Ok(())
}

/// Applies the qudit CNOT between 0-based sites `control` and `target`.
pub fn cnot_apply(state: &PureState, control: usize, target: usize) -> Result<PureState> {
    let n = state.n();
    check_sites(n, control, target)?;
    let mut amps = state.amplitudes().as_slice().to_vec();
    let mut scratch = amps.clone();
    cnot_in_place(
        &mut amps,
        &mut scratch,
        n,
        state.qudit_dim(),
        control,
        target,
    );
    PureState::from_amplitudes(n, state.qudit_dim(), amps)
}

/// Uniform axis, then uniform index choice for that axis.
pub fn random_generator<R: Rng + ?Sized>(
    rng: &mut R,
    qudit_dim: usize,
) -> Result<GellMannGenerator> {
    if qudit_dim < 2 {
        return Err(Error::Generator(format!(
            "qudit dimension must be at least 2, got {qudit_dim}"
        )));
    }
    let axis = match rng.gen_range(0..3u8) {
        0 => Axis::X,
        1 => Axis::Y,
        _ => Axis::Z,
    };
    match axis {
        Axis::Z => GellMannGenerator::z(rng.gen_range(1..qudit_dim), qudit_dim),
        _ => {
            let pairs = qudit_dim * (qudit_dim - 1) / 2;
            let (j, k) = nth_pair(rng.gen_range(0..pairs), qudit_dim);
            GellMannGenerator::new(axis, j, Some(k), qudit_dim)
        }
    }
}

/// `r`-th pair `(j, k)`, `1 <= j < k <= d`, in lexicographic order.
fn nth_pair(mut r: usize, d: usize) -> (usize, usize) {
    for j in 1..d {
        let count = d - j;
        if r < count {
            return (j, j + 1 + r);
        }
        r -= count;
    }
    unreachable!("pair rank out of range")
}

/// Every valid generator for a qudit of dimension `qudit_dim`, X pairs, Y pairs, then Z.
pub fn all_generators(qudit_dim: usize) -> Vec<GellMannGenerator> {
    let mut out = Vec::with_capacity(qudit_dim * qudit_dim - 1);
    for axis in [Axis::X, Axis::Y] {
        for j in 1..qudit_dim {
            for k in j + 1..=qudit_dim {
                out.push(GellMannGenerator::new(axis, j, Some(k), qudit_dim).unwrap());
            }
        }
    }
    for j in 1..qudit_dim {
        out.push(GellMannGenerator::z(j, qudit_dim).unwrap());
    }
    out
}
