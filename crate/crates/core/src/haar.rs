//! Haar-random unitaries and Monte-Carlo checks of the first and second
//! moment integrals over `U(d)`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{AnsatzTemplate, Observable};
use crate::error::{Error, Result};
use crate::experiment::ensemble_gradients;
use crate::gradient::first_parameter_index;
use crate::linalg::ComplexMatrix;
use crate::seed::sample_rng;

/// Monte-Carlo estimate of a Haar average next to its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HaarMoment {
    pub estimate: Complex64,
    /// `sqrt(Σ|x − x̄|² / (N(N−1)))`, covering real and imaginary parts together.
    pub standard_error: f64,
    pub closed_form: Complex64,
    pub samples: usize,
}

impl HaarMoment {
    pub fn deviation(&self) -> f64 {
        (self.estimate - self.closed_form).norm()
    }

    /// Deviation in units of the standard error. A zero-variance estimate
    /// counts as `0` when it matches the closed form to rounding and `∞` otherwise.
    pub fn z_score(&self) -> f64 {
        let dev = self.deviation();
        if self.standard_error > 0.0 {
            return dev / self.standard_error;
        }
        let scale = self.closed_form.norm().max(1.0);
        if dev <= 1e-9 * scale {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.z_score() <= sigmas
    }
}

/// Sample mean and its standard error.
pub fn summarize(values: &[Complex64], closed_form: Complex64) -> HaarMoment {
    let n = values.len();
    let mean = values
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, v| acc + v)
        / n as f64;
    let standard_error = if n > 1 {
        let ss: f64 = values.iter().map(|v| (v - mean).norm_sqr()).sum();
        (ss / ((n - 1) as f64 * n as f64)).sqrt()
    } else {
        0.0
    };
    HaarMoment {
        estimate: mean,
        standard_error,
        closed_form,
        samples: n,
    }
}

/// `d × d` matrix of i.i.d. standard complex Gaussians (`E|z|² = 1`).
pub fn random_ginibre<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let data = (0..d * d)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * scale, im * scale)
        })
        .collect();
    ComplexMatrix::from_vec(d, d, data).expect("square ginibre")
}

/// QR factorization of a square matrix by modified Gram–Schmidt on columns.
///
/// `R` has a real positive diagonal, which is the phase convention that makes
/// the `Q` of a Ginibre matrix exactly Haar distributed.
pub fn qr_decompose(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if !m.is_square() {
        return Err(Error::Shape("QR expects a square matrix".into()));
    }
    let d = m.rows();
    let mut cols: Vec<Vec<Complex64>> = (0..d)
        .map(|c| (0..d).map(|r| m[(r, c)]).collect())
        .collect();
    let mut r_mat = ComplexMatrix::zeros(d, d)?;
    for j in 0..d {
        // two passes keep Q orthonormal to rounding
        for _ in 0..2 {
            for i in 0..j {
                let proj = cols[i]
                    .iter()
                    .zip(&cols[j])
                    .fold(Complex64::new(0.0, 0.0), |acc, (q, v)| acc + q.conj() * v);
                r_mat[(i, j)] += proj;
                let qi = cols[i].clone();
                for (v, q) in cols[j].iter_mut().zip(&qi) {
                    *v -= proj * q;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Validation("rank-deficient matrix in QR".into()));
        }
        r_mat[(j, j)] = Complex64::new(norm, 0.0);
        for v in cols[j].iter_mut() {
            *v /= norm;
        }
    }
    let mut q = ComplexMatrix::zeros(d, d)?;
    for (c, col) in cols.iter().enumerate() {
        for (r, &z) in col.iter().enumerate() {
            q[(r, c)] = z;
        }
    }
    Ok((q, r_mat))
}

/// Haar-distributed `d × d` unitary: Ginibre matrix, QR, columns phased so
/// that `diag(R)` is real positive.
pub fn sample_haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if d == 0 {
        return Err(Error::Shape("Haar unitary needs d >= 1".into()));
    }
    loop {
        let g = random_ginibre(d, rng);
        match qr_decompose(&g) {
            Ok((mut q, r)) => {
                for c in 0..d {
                    let diag = r[(c, c)];
                    let phase = diag / diag.norm();
                    if phase != Complex64::new(1.0, 0.0) {
                        for row in 0..d {
                            q[(row, c)] *= phase;
                        }
                    }
                }
                return Ok(q);
            }
            // measure-zero event; draw again
            Err(Error::Validation(_)) => continue,
            Err(e) => return Err(e),
        }
    }
}

fn tr(m: &ComplexMatrix) -> Complex64 {
    m.trace().expect("square")
}

fn check_square(d: usize, ms: &[&ComplexMatrix]) -> Result<()> {
    if d == 0 {
        return Err(Error::Shape("dimension must be at least 1".into()));
    }
    for m in ms {
        if m.rows() != d || m.cols() != d {
            return Err(Error::Shape(format!(
                "expected {d}x{d} operand, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
    }
    Ok(())
}

fn check_second_moment(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Domain(
            "second-moment formulas are singular at d = 1 (d² − 1 = 0)".into(),
        ));
    }
    Ok(())
}

/// `∫dμ(W) Tr[W A W† B] = Tr[A] Tr[B] / d`.
pub fn lemma1_closed_form(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    let d = a.rows();
    check_square(d, &[a, b])?;
    Ok(tr(a) * tr(b) / d as f64)
}

/// `∫dμ(W) Tr[W A W† B]·Tr[W C W† D]`:
///
/// ```text
/// (Tr A Tr B Tr C Tr D + Tr[AC] Tr[BD]) / (d²−1)
///   − (Tr[AC] Tr B Tr D + Tr A Tr C Tr[BD]) / (d(d²−1))
/// ```
pub fn lemma2_closed_form(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    dd: &ComplexMatrix,
) -> Result<Complex64> {
    let d = a.rows();
    check_square(d, &[a, b, c, dd])?;
    check_second_moment(d)?;
    let (ta, tb, tc, td) = (tr(a), tr(b), tr(c), tr(dd));
    let tac = tr(&(a * c));
    let tbd = tr(&(b * dd));
    let df = d as f64;
    let d2m1 = df * df - 1.0;
    Ok((ta * tb * tc * td + tac * tbd) / d2m1 - (tac * tb * td + ta * tc * tbd) / (df * d2m1))
}

/// `∫dμ(W) Tr[W A W† B W C W† D]`:
///
/// ```text
/// (Tr A Tr C Tr[BD] + Tr[AC] Tr B Tr D) / (d²−1)
///   − (Tr[AC] Tr[BD] + Tr A Tr B Tr C Tr D) / (d(d²−1))
/// ```
pub fn lemma3_closed_form(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    dd: &ComplexMatrix,
) -> Result<Complex64> {
    let d = a.rows();
    check_square(d, &[a, b, c, dd])?;
    check_second_moment(d)?;
    let (ta, tb, tc, td) = (tr(a), tr(b), tr(c), tr(dd));
    let tac = tr(&(a * c));
    let tbd = tr(&(b * dd));
    let df = d as f64;
    let d2m1 = df * df - 1.0;
    Ok((ta * tc * tbd + tac * tb * td) / d2m1 - (tac * tbd + ta * tb * tc * td) / (df * d2m1))
}

/// Evaluates `f(W)` on `samples` Haar unitaries, one derived stream per sample.
fn haar_average<R, F>(d: usize, samples: usize, rng: &mut R, f: F) -> Result<Vec<Complex64>>
where
    R: Rng + ?Sized,
    F: Fn(&ComplexMatrix) -> Complex64 + Sync,
{
    if samples == 0 {
        return Err(Error::Config("need at least one sample".into()));
    }
    let master: u64 = rng.gen();
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let w = sample_haar_unitary(d, &mut sample_rng(master, i))?;
            Ok(f(&w))
        })
        .collect()
}

pub fn mc_lemma1<R: Rng + ?Sized>(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    d: usize,
    samples: usize,
    rng: &mut R,
) -> Result<HaarMoment> {
    check_square(d, &[a, b])?;
    let closed = lemma1_closed_form(a, b)?;
    let values = haar_average(d, samples, rng, |w| {
        let wd = w.adjoint();
        tr(&(&(&(w * a) * &wd) * b))
    })?;
    Ok(summarize(&values, closed))
}

pub fn mc_lemma2<R: Rng + ?Sized>(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    dd: &ComplexMatrix,
    d: usize,
    samples: usize,
    rng: &mut R,
) -> Result<HaarMoment> {
    check_square(d, &[a, b, c, dd])?;
    let closed = lemma2_closed_form(a, b, c, dd)?;
    let values = haar_average(d, samples, rng, |w| {
        let wd = w.adjoint();
        let x = &(w * a) * &wd;
        let y = &(w * c) * &wd;
        tr(&(&x * b)) * tr(&(&y * dd))
    })?;
    Ok(summarize(&values, closed))
}

pub fn mc_lemma3<R: Rng + ?Sized>(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    dd: &ComplexMatrix,
    d: usize,
    samples: usize,
    rng: &mut R,
) -> Result<HaarMoment> {
    check_square(d, &[a, b, c, dd])?;
    let closed = lemma3_closed_form(a, b, c, dd)?;
    let values = haar_average(d, samples, rng, |w| {
        let wd = w.adjoint();
        let x = &(w * a) * &wd;
        let y = &(w * c) * &wd;
        tr(&(&(&x * b) * &(&y * dd)))
    })?;
    Ok(summarize(&values, closed))
}

/// Sample mean of `∂C` at `k = (1, 1)` over random circuits, for the global
/// zero projector. The closed form is `0`.
pub fn mc_mean_gradient(
    template: AnsatzTemplate,
    n: usize,
    qudit_dim: usize,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<HaarMoment> {
    let observable = Observable::global_zero_projector(n, qudit_dim)?;
    mc_mean_gradient_with(template, n, qudit_dim, depth, samples, seed, &observable)
}

pub fn mc_mean_gradient_with(
    template: AnsatzTemplate,
    n: usize,
    qudit_dim: usize,
    depth: usize,
    samples: usize,
    seed: u64,
    observable: &Observable,
) -> Result<HaarMoment> {
    let grads = ensemble_gradients(
        template,
        n,
        qudit_dim,
        depth,
        samples,
        seed,
        observable,
        first_parameter_index(),
    )?;
    let values: Vec<Complex64> = grads.into_iter().map(|g| Complex64::new(g, 0.0)).collect();
    Ok(summarize(&values, Complex64::new(0.0, 0.0)))
}

/// Which Haar integral a check exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LemmaKind {
    Lemma1,
    Lemma2,
    Lemma3,
    /// Entry-wise first moment `E[W_ij] = 0`.
    FirstMoment,
}

impl std::fmt::Display for LemmaKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LemmaKind::Lemma1 => "lemma1",
            LemmaKind::Lemma2 => "lemma2",
            LemmaKind::Lemma3 => "lemma3",
            LemmaKind::FirstMoment => "first-moment",
        };
        f.write_str(s)
    }
}

/// One Monte-Carlo check against a sigma band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub kind: LemmaKind,
    pub d: usize,
    /// Matrix tuple index, or the flattened entry index for first-moment checks.
    pub case: usize,
    pub moment: HaarMoment,
    pub sigmas: f64,
}

impl LemmaCheck {
    pub fn passed(&self) -> bool {
        self.moment.within(self.sigmas)
    }
}

/// Sigma band for the second-moment and trace-identity checks.
pub const LEMMA_SIGMAS: f64 = 3.0;
/// First-moment sigma band.
pub const FIRST_MOMENT_SIGMAS: f64 = 5.0;

/// The three trace identities on `tuples` random Ginibre operand tuples per dimension, plus the
/// entry-wise first moment of the sampler. Every check draws fresh unitaries.
pub fn verify_lemma_suite(
    dims: &[usize],
    samples: usize,
    tuples: usize,
    seed: u64,
) -> Result<Vec<LemmaCheck>> {
    let mut rng = crate::seed::master_rng(seed);
    let mut checks = Vec::new();
    for &d in dims {
        for case in 0..tuples {
            let ops: Vec<ComplexMatrix> = (0..4).map(|_| random_ginibre(d, &mut rng)).collect();
            let (a, b, c, dd) = (&ops[0], &ops[1], &ops[2], &ops[3]);
            let m1 = mc_lemma1(a, b, d, samples, &mut rng)?;
            checks.push(LemmaCheck {
                kind: LemmaKind::Lemma1,
                d,
                case,
                moment: m1,
                sigmas: LEMMA_SIGMAS,
            });
            let m2 = mc_lemma2(a, b, c, dd, d, samples, &mut rng)?;
            checks.push(LemmaCheck {
                kind: LemmaKind::Lemma2,
                d,
                case,
                moment: m2,
                sigmas: LEMMA_SIGMAS,
            });
            let m3 = mc_lemma3(a, b, c, dd, d, samples, &mut rng)?;
            checks.push(LemmaCheck {
                kind: LemmaKind::Lemma3,
                d,
                case,
                moment: m3,
                sigmas: LEMMA_SIGMAS,
            });
        }
        let master: u64 = rng.gen();
        let draws: Vec<ComplexMatrix> = (0..samples as u64)
            .into_par_iter()
            .map(|i| sample_haar_unitary(d, &mut sample_rng(master, i)))
            .collect::<Result<_>>()?;
        for entry in 0..d * d {
            let values: Vec<Complex64> = draws.iter().map(|w| w.as_slice()[entry]).collect();
            checks.push(LemmaCheck {
                kind: LemmaKind::FirstMoment,
                d,
                case: entry,
                moment: summarize(&values, Complex64::new(0.0, 0.0)),
                sigmas: FIRST_MOMENT_SIGMAS,
            });
        }
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::AnsatzLabel;
    use crate::linalg::basis_projector;
    use crate::seed::master_rng;

    #[test]
    fn sampled_unitaries_are_unitary() {
        let mut rng = master_rng(1);
        for d in 1..=8 {
            for _ in 0..50 {
                let w = sample_haar_unitary(d, &mut rng).unwrap();
                assert!(w.is_unitary(1e-10));
            }
        }
        let w = sample_haar_unitary(1, &mut rng).unwrap();
        assert!((w[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn qr_reconstructs() {
        let mut rng = master_rng(2);
        let g = random_ginibre(5, &mut rng);
        let (q, r) = qr_decompose(&g).unwrap();
        assert!((&q * &r).approx_eq(&g, 1e-12));
        for i in 0..5 {
            assert!(r[(i, i)].re > 0.0 && r[(i, i)].im == 0.0);
            for j in 0..i {
                assert_eq!(r[(i, j)], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn lemma1_identity_is_exact() {
        let id = ComplexMatrix::identity(3).unwrap();
        let m = mc_lemma1(&id, &id, 3, 200, &mut master_rng(3)).unwrap();
        assert_eq!(m.closed_form, Complex64::new(3.0, 0.0));
        assert!((m.estimate - m.closed_form).norm() < 1e-12);
        assert!(m.standard_error < 1e-12);
        assert!(m.within(3.0));
    }

    #[test]
    fn lemma1_projector_closed_form() {
        let p = basis_projector(0, 2).unwrap();
        assert_eq!(
            lemma1_closed_form(&p, &p).unwrap(),
            Complex64::new(0.5, 0.0)
        );
    }

    #[test]
    fn lemma2_closed_form_examples() {
        for d in 2..=5 {
            let id = ComplexMatrix::identity(d).unwrap();
            let v = lemma2_closed_form(&id, &id, &id, &id).unwrap();
            assert!(
                (v - Complex64::new((d * d) as f64, 0.0)).norm() < 1e-12,
                "d={d}: {v}"
            );
            let v3 = lemma3_closed_form(&id, &id, &id, &id).unwrap();
            assert!(
                (v3 - Complex64::new(d as f64, 0.0)).norm() < 1e-12,
                "d={d}: {v3}"
            );
        }
        let p = basis_projector(0, 2).unwrap();
        let id = ComplexMatrix::identity(2).unwrap();
        let v = lemma2_closed_form(&p, &id, &p, &id).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn second_moment_rejects_d1() {
        let one = ComplexMatrix::identity(1).unwrap();
        assert!(matches!(
            lemma2_closed_form(&one, &one, &one, &one),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            mc_lemma3(&one, &one, &one, &one, 1, 10, &mut master_rng(0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn shape_mismatch() {
        let a = ComplexMatrix::identity(2).unwrap();
        let b = ComplexMatrix::identity(3).unwrap();
        assert!(matches!(
            mc_lemma1(&a, &b, 2, 10, &mut master_rng(0)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn haar_entry_modulus_mean() {
        let mut rng = master_rng(4);
        let values: Vec<Complex64> = (0..100_000)
            .map(|_| {
                Complex64::new(
                    sample_haar_unitary(4, &mut rng).unwrap()[(0, 0)].norm_sqr(),
                    0.0,
                )
            })
            .collect();
        let m = summarize(&values, Complex64::new(0.25, 0.0));
        assert!(m.within(3.0), "{m:?}");
    }

    #[test]
    fn identity_observable_gradient_mean_is_zero() {
        let t = AnsatzTemplate::from_label(AnsatzLabel::D);
        let o = Observable::identity(2, 3).unwrap();
        let m = mc_mean_gradient_with(t, 2, 3, 5, 50, 1, &o).unwrap();
        assert!(m.estimate.norm() <= 1e-12);
        assert!(m.standard_error <= 1e-12);
    }
}
