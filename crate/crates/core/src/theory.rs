//! Closed-form gradient-variance predictions.
//!
//! For a 2-design ensemble, a pure initial state and any traceless generator
//! with `Tr[S²] = 2`:
//!
//! ```text
//! Var[∂C] = d'^(n-1) / (d+1) · ( Tr[O²]/(d²−1) − Tr[O]²/(d(d²−1)) ),   d = d'^n
//! ```
//!
//! For `O = |0…0⟩⟨0…0|` this reduces to `1 / (d' (d'^n + 1)²)`. Both are
//! evaluated in exact rational arithmetic whenever the inputs are integral.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::circuit::Observable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariancePrediction {
    pub variance: f64,
    pub n: usize,
    pub qudit_dim: usize,
    pub register_dim: u128,
    pub observable_trace: f64,
    pub observable_trace_sq: f64,
}

fn check_dims(n: usize, qudit_dim: usize) -> Result<u128> {
    if n == 0 {
        return Err(Error::Domain(
            "register dimension 1 (n = 0) makes d² − 1 vanish".into(),
        ));
    }
    if qudit_dim < 2 {
        return Err(Error::Domain(format!(
            "qudit dimension must be at least 2, got {qudit_dim}"
        )));
    }
    let mut d: u128 = 1;
    for _ in 0..n {
        d = d
            .checked_mul(qudit_dim as u128)
            .ok_or_else(|| Error::Domain(format!("{qudit_dim}^{n} overflows")))?;
    }
    Ok(d)
}

fn int(v: u128) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Exact prediction from `Tr[O]` and `Tr[O²]`.
pub fn theorem1_variance_exact(
    trace: &BigRational,
    trace_sq: &BigRational,
    n: usize,
    qudit_dim: usize,
) -> Result<BigRational> {
    let d = check_dims(n, qudit_dim)?;
    let dd = int(d);
    let one = int(1);
    let prefactor = int((d / qudit_dim as u128) as u128) / (&dd + &one);
    let d2m1 = &dd * &dd - &one;
    let bracket = trace_sq / &d2m1 - trace * trace / (&dd * &d2m1);
    Ok(prefactor * bracket)
}

/// Floating-point prediction from `Tr[O]` and `Tr[O²]`.
pub fn theorem1_variance_from_traces(
    trace: f64,
    trace_sq: f64,
    n: usize,
    qudit_dim: usize,
) -> Result<f64> {
    let d = check_dims(n, qudit_dim)?;
    let exact_inputs = trace.fract() == 0.0
        && trace_sq.fract() == 0.0
        && trace.abs() < 1e15
        && trace_sq.abs() < 1e15;
    if exact_inputs && d <= u64::MAX as u128 {
        let tr = BigRational::from_integer(BigInt::from(trace as i64));
        let tr2 = BigRational::from_integer(BigInt::from(trace_sq as i64));
        let v = theorem1_variance_exact(&tr, &tr2, n, qudit_dim)?;
        return Ok(rational_to_f64(&v));
    }
    let df = d as f64;
    let d2m1 = df * df - 1.0;
    let prefactor = (qudit_dim as f64).powi(n as i32 - 1) / (df + 1.0);
    Ok(prefactor * (trace_sq / d2m1 - trace * trace / (df * d2m1)))
}

/// Prediction for a concrete observable on `n` qudits of dimension `qudit_dim`.
pub fn theorem1_variance(
    observable: &Observable,
    n: usize,
    qudit_dim: usize,
) -> Result<VariancePrediction> {
    let d = check_dims(n, qudit_dim)?;
    if observable.dim() as u128 != d {
        return Err(Error::Shape(format!(
            "observable dimension {} does not match {qudit_dim}^{n} = {d}",
            observable.dim()
        )));
    }
    let variance =
        theorem1_variance_from_traces(observable.trace(), observable.trace_sq(), n, qudit_dim)?;
    // Cauchy–Schwarz keeps this non-negative up to rounding.
    let variance = if variance < 0.0 && variance > -1e-15 {
        0.0
    } else {
        variance
    };
    Ok(VariancePrediction {
        variance,
        n,
        qudit_dim,
        register_dim: d,
        observable_trace: observable.trace(),
        observable_trace_sq: observable.trace_sq(),
    })
}

/// `1 / (d' (d'^n + 1)²)`, exact.
pub fn corollary1_variance_exact(n: usize, qudit_dim: usize) -> Result<BigRational> {
    let d = check_dims(n, qudit_dim)?;
    let denom = BigInt::from(qudit_dim) * (BigInt::from(d) + 1) * (BigInt::from(d) + 1);
    Ok(BigRational::new(BigInt::from(1), denom))
}

/// `1 / (d' (d'^n + 1)²)`.
pub fn corollary1_variance(n: usize, qudit_dim: usize) -> Result<f64> {
    check_dims(n, qudit_dim)?;
    Ok(rational_to_f64(&corollary1_variance_exact(n, qudit_dim)?))
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    r.to_f64().unwrap_or_else(|| {
        let num = r.numer().to_f64().unwrap_or(f64::NAN);
        let den = r.denom().to_f64().unwrap_or(f64::NAN);
        num / den
    })
}

/// Chebyshev tail bound `min(1, Var/δ²)` on `Pr(|∂C − ⟨∂C⟩| ≥ δ)`.
pub fn chebyshev_bound(variance: f64, delta: f64) -> Result<f64> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::Domain(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if variance.is_nan() || variance < 0.0 {
        return Err(Error::Domain(format!(
            "variance must be non-negative, got {variance}"
        )));
    }
    Ok((variance / (delta * delta)).min(1.0))
}

/// Global-projector prediction tabulated over qudit dimensions, in the order given.
pub fn amplification_curve(n: usize, qudit_dims: &[usize]) -> Result<Vec<(usize, f64)>> {
    if qudit_dims.is_empty() {
        return Err(Error::Domain("empty qudit-dimension range".into()));
    }
    qudit_dims
        .iter()
        .map(|&dp| Ok((dp, corollary1_variance(n, dp)?)))
        .collect()
}

/// Log-log slopes between consecutive points of a curve.
pub fn loglog_slopes(curve: &[(usize, f64)]) -> Vec<f64> {
    curve
        .windows(2)
        .map(|w| (w[1].1.ln() - w[0].1.ln()) / ((w[1].0 as f64).ln() - (w[0].0 as f64).ln()))
        .collect()
}

/// Variance when only the circuit side away from the differentiated gate is a
/// 2-design and the gate acts directly on `|0⟩` of its qudit (the first gate
/// of the first layer with `ρ = |0…0⟩⟨0…0|`), for the global zero projector.
///
/// The generator commutes with its own rotation, so the local state's
/// generator variance is `⟨0|S²|0⟩ − ⟨0|S|0⟩²`, which is 1 for the X/Y pairs
/// touching level 1 and 0 otherwise. Averaged over the uniform generator draw
/// that is `4 / (3d')`, giving `2 / (3 d' d (d+1))`.
pub fn boundary_gate_variance(n: usize, qudit_dim: usize) -> Result<f64> {
    let d = check_dims(n, qudit_dim)? as f64;
    let dp = qudit_dim as f64;
    Ok(2.0 / (3.0 * dp * d * (d + 1.0)))
}
