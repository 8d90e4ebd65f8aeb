//! The exponential and the φ-functions
//! `φ_0(z) = e^z`, `φ_{j+1}(z) = (φ_j(z) - 1/j!) / z`, applied through an
//! eigendecomposition.

use super::EigenDecomposition;
use crate::error::{Error, Result};

const FACTORIAL: [f64; 4] = [1.0, 1.0, 2.0, 6.0];

/// Below this modulus the φ-functions are summed from their Taylor series;
/// above it the recurrence loses at most a few ulps per order.
const SERIES_RADIUS: f64 = 1.0;
const SERIES_TERMS: usize = 24;

/// Scalar `φ_j(z)` for `j ∈ 0..=3`.
pub fn phi(j: usize, z: f64) -> Result<f64> {
    if j > 3 {
        return Err(Error::InvalidOrder(j));
    }
    if j == 0 {
        return Ok(z.exp());
    }
    if z.abs() < SERIES_RADIUS {
        // Σ_k z^k / (k+j)!, Horner form
        let mut acc = 0.0;
        for k in (0..SERIES_TERMS).rev() {
            acc = 1.0 + acc * z / (k + j + 1) as f64;
        }
        return Ok(acc / FACTORIAL[j]);
    }
    let mut value = z.exp();
    for order in 0..j {
        value = (value - 1.0 / FACTORIAL[order]) / z;
    }
    Ok(value)
}

/// `Q f(Λ) Qᵀ v` for a scalar function `f` of the eigenvalues.
pub fn spectral_apply(
    decomp: &EigenDecomposition,
    v: &[f64],
    f: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    if v.len() != decomp.dim() {
        return Err(Error::DimensionMismatch {
            expected: decomp.dim(),
            found: v.len(),
        });
    }
    let mut coeffs = decomp.to_eigenbasis(v);
    for (c, &lam) in coeffs.iter_mut().zip(decomp.eigenvalues()) {
        *c *= f(lam);
    }
    Ok(decomp.from_eigenbasis(&coeffs))
}

/// `e^{tM} v` with `t ≥ 0`.
pub fn exp_action(decomp: &EigenDecomposition, t: f64, v: &[f64]) -> Result<Vec<f64>> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "exponential time must be finite and non-negative, got {t}"
        )));
    }
    spectral_apply(decomp, v, |lam| (t * lam).exp())
}

/// `φ_j(tM) v`.
pub fn phi_action(decomp: &EigenDecomposition, j: usize, t: f64, v: &[f64]) -> Result<Vec<f64>> {
    if j > 3 {
        return Err(Error::InvalidOrder(j));
    }
    if j >= 1 && !(t > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "phi_{j} needs a positive time, got {t}"
        )));
    }
    let factors = decomp
        .eigenvalues()
        .iter()
        .map(|&lam| phi(j, t * lam))
        .collect::<Result<Vec<_>>>()?;
    if v.len() != decomp.dim() {
        return Err(Error::DimensionMismatch {
            expected: decomp.dim(),
            found: v.len(),
        });
    }
    let mut coeffs = decomp.to_eigenbasis(v);
    for (c, f) in coeffs.iter_mut().zip(factors) {
        *c *= f;
    }
    Ok(decomp.from_eigenbasis(&coeffs))
}
