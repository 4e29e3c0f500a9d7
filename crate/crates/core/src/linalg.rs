//! Dense complex vectors and matrices.
//!
//! Only the handful of operations the simulator needs: products, Kronecker
//! products, traces, adjoints and basis projectors. Storage is row-major and
//! every reduction sums in index order so results are bit-reproducible.

use std::ops::{Index, IndexMut, Mul};
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default cap on dense entry / amplitude counts.
pub const DEFAULT_DIM_CAP: usize = 10_000_000;

/// Environment variable overriding [`DEFAULT_DIM_CAP`].
pub const DIM_CAP_ENV: &str = "QUDITBP_DIM_CAP";

/// Default element-wise tolerance used by [`ComplexMatrix::approx_eq`].
pub const DEFAULT_TOL: f64 = 1e-12;

// 0 means "not yet resolved".
static DIM_CAP: AtomicUsize = AtomicUsize::new(0);

/// Current cap on the number of stored entries (or amplitudes).
///
/// Resolved once from `QUDITBP_DIM_CAP` if set, otherwise the default.
pub fn dim_cap() -> usize {
    let cap = DIM_CAP.load(Ordering::Relaxed);
    if cap != 0 {
        return cap;
    }
    let resolved = std::env::var(DIM_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_DIM_CAP);
    DIM_CAP.store(resolved, Ordering::Relaxed);
    resolved
}

/// Overrides the entry cap for the rest of the process.
pub fn set_dim_cap(cap: usize) {
    DIM_CAP.store(cap.max(1), Ordering::Relaxed);
}

pub(crate) fn check_cap(entries: usize) -> Result<()> {
    let cap = dim_cap();
    if entries > cap {
        return Err(Error::DimensionCap {
            requested: entries,
            cap,
        });
    }
    Ok(())
}

/// `base^exp` with overflow reported as a dimension-cap error.
pub fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base).ok_or(Error::DimensionCap {
            requested: usize::MAX,
            cap: dim_cap(),
        })?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    data: Vec<Complex64>,
}

impl ComplexVector {
    pub fn zeros(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Shape("vector length must be at least 1".into()));
        }
        check_cap(len)?;
        Ok(Self {
            data: vec![Complex64::new(0.0, 0.0); len],
        })
    }

    /// Standard basis vector `e_index`.
    pub fn basis(index: usize, len: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::Range(format!(
                "basis index {index} out of range for length {len}"
            )));
        }
        let mut v = Self::zeros(len)?;
        v.data[index] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn from_vec(data: Vec<Complex64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Shape("vector length must be at least 1".into()));
        }
        Ok(Self { data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    /// `⟨self|other⟩`, conjugating `self`.
    pub fn inner(&self, other: &ComplexVector) -> Complex64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn approx_eq(&self, other: &ComplexVector, tol: f64) -> bool {
        self.len() == other.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| (a - b).norm() <= tol)
    }
}

impl Index<usize> for ComplexVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.data[i]
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        let entries = rows.checked_mul(cols).ok_or(Error::DimensionCap {
            requested: usize::MAX,
            cap: dim_cap(),
        })?;
        check_cap(entries)?;
        Ok(Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); entries],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim, dim)?;
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        Ok(m)
    }

    pub fn from_diag(diag: &[Complex64]) -> Result<Self> {
        let mut m = Self::zeros(diag.len(), diag.len())?;
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        Ok(m)
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows.saturating_mul(cols),
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::from_vec(r, c, rows.concat())
    }

    /// `|v⟩⟨v|`.
    pub fn outer(v: &ComplexVector) -> Result<Self> {
        let n = v.len();
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self[(r, c)].conj());
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn trace(&self) -> Result<Complex64> {
        if !self.is_square() {
            return Err(Error::Shape(format!(
                "trace of non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        Ok((0..self.rows).fold(Complex64::new(0.0, 0.0), |acc, i| acc + self[(i, i)]))
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols)?;
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if self.cols != v.len() {
            return Err(Error::Shape(format!(
                "cannot apply {}x{} matrix to length-{} vector",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let data = (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v.as_slice())
                    .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a * b)
            })
            .collect();
        ComplexVector::from_vec(data)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &ComplexMatrix,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "shape mismatch {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Largest element-wise modulus difference, or `None` when shapes differ.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> Option<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        )
    }

    pub fn approx_eq(&self, other: &ComplexMatrix, tol: f64) -> bool {
        self.max_abs_diff(other).is_some_and(|d| d <= tol)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.approx_eq(&self.adjoint(), tol)
    }

    /// `‖A·A† − I‖_max ≤ tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        match (
            self.matmul(&self.adjoint()),
            ComplexMatrix::identity(self.rows),
        ) {
            (Ok(p), Ok(id)) => p.approx_eq(&id, tol),
            _ => false,
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on a shape mismatch; use [`ComplexMatrix::matmul`] to get an error instead.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows.checked_mul(b.rows);
    let cols = a.cols.checked_mul(b.cols);
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(c)) => (r, c),
        _ => {
            return Err(Error::DimensionCap {
                requested: usize::MAX,
                cap: dim_cap(),
            })
        }
    };
    let mut out = ComplexMatrix::zeros(rows, cols)?;
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let s = a[(ar, ac)];
            for br in 0..b.rows {
                let dst = (ar * b.rows + br) * cols + ac * b.cols;
                for (d, &z) in out.data[dst..dst + b.cols].iter_mut().zip(b.row(br)) {
                    *d = s * z;
                }
            }
        }
    }
    Ok(out)
}

pub fn trace(a: &ComplexMatrix) -> Result<Complex64> {
    a.trace()
}

pub fn adjoint(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint()
}

/// Rank-1 projector `|index⟩⟨index|` of size `dim × dim`.
pub fn basis_projector(index: usize, dim: usize) -> Result<ComplexMatrix> {
    if index >= dim {
        return Err(Error::Range(format!(
            "projector index {index} out of range for dimension {dim}"
        )));
    }
    let mut m = ComplexMatrix::zeros(dim, dim)?;
    m[(index, index)] = Complex64::new(1.0, 0.0);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[vec![c(0., 0.), c(1., 0.)], vec![c(1., 0.), c(0., 0.)]]).unwrap()
    }

    #[test]
    fn kron_identities() {
        let i2 = ComplexMatrix::identity(2).unwrap();
        assert!(kron(&i2, &i2)
            .unwrap()
            .approx_eq(&ComplexMatrix::identity(4).unwrap(), 0.0));
    }

    #[test]
    fn kron_diagonal_structure() {
        let z = ComplexMatrix::from_diag(&[c(1., 0.), c(-1., 0.)]).unwrap();
        let i2 = ComplexMatrix::identity(2).unwrap();
        let expected =
            ComplexMatrix::from_diag(&[c(1., 0.), c(1., 0.), c(-1., 0.), c(-1., 0.)]).unwrap();
        assert_eq!(kron(&z, &i2).unwrap(), expected);
    }

    #[test]
    fn kron_xx_flips_e0_to_e3() {
        let xx = kron(&pauli_x(), &pauli_x()).unwrap();
        let out = xx.apply(&ComplexVector::basis(0, 4).unwrap()).unwrap();
        assert_eq!(out, ComplexVector::basis(3, 4).unwrap());
    }

    #[test]
    fn kron_respects_cap() {
        set_dim_cap(DEFAULT_DIM_CAP);
        let big = ComplexMatrix::identity(2000).unwrap();
        assert!(matches!(kron(&big, &big), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn traces() {
        assert_eq!(
            trace(&ComplexMatrix::identity(5).unwrap()).unwrap(),
            c(5., 0.)
        );
        assert_eq!(trace(&basis_projector(0, 3).unwrap()).unwrap(), c(1., 0.));
        let rect = ComplexMatrix::zeros(2, 3).unwrap();
        assert!(matches!(trace(&rect), Err(Error::Shape(_))));
    }

    #[test]
    fn adjoint_cases() {
        let id = ComplexMatrix::identity(3).unwrap();
        assert_eq!(adjoint(&id), id);
        let di = ComplexMatrix::from_diag(&[c(0., 1.)]).unwrap();
        assert_eq!(
            adjoint(&di),
            ComplexMatrix::from_diag(&[c(0., -1.)]).unwrap()
        );
    }

    #[test]
    fn projector_properties() {
        let p = basis_projector(0, 2).unwrap();
        let expected =
            ComplexMatrix::from_rows(&[vec![c(1., 0.), c(0., 0.)], vec![c(0., 0.), c(0., 0.)]])
                .unwrap();
        assert_eq!(p, expected);
        for k in 0..4 {
            let p = basis_projector(k, 4).unwrap();
            assert_eq!(p.trace().unwrap(), c(1., 0.));
            assert_eq!(&p * &p, p);
        }
        assert!(matches!(basis_projector(4, 4), Err(Error::Range(_))));
    }

    fn matrix_strategy(rows: usize, cols: usize) -> impl Strategy<Value = ComplexMatrix> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), rows * cols).prop_map(move |v| {
            ComplexMatrix::from_vec(rows, cols, v.into_iter().map(|(a, b)| c(a, b)).collect())
                .unwrap()
        })
    }

    proptest! {
        #[test]
        fn trace_is_cyclic(a in matrix_strategy(3, 4), b in matrix_strategy(4, 3)) {
            let ab = (&a * &b).trace().unwrap();
            let ba = (&b * &a).trace().unwrap();
            prop_assert!((ab - ba).norm() <= 1e-10);
        }

        #[test]
        fn kron_is_associative(a in matrix_strategy(2, 2), b in matrix_strategy(3, 2), c in matrix_strategy(2, 3)) {
            let left = kron(&kron(&a, &b).unwrap(), &c).unwrap();
            let right = kron(&a, &kron(&b, &c).unwrap()).unwrap();
            prop_assert!(left.approx_eq(&right, 1e-12));
        }

        #[test]
        fn adjoint_reverses_products(a in matrix_strategy(3, 3), b in matrix_strategy(3, 3)) {
            let lhs = (&a * &b).adjoint();
            let rhs = &b.adjoint() * &a.adjoint();
            prop_assert!(lhs.approx_eq(&rhs, 1e-12));
            prop_assert_eq!(a.adjoint().adjoint(), a);
        }
    }
}
