use super::{DenseMatrix, EigenDecomposition};
use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::DimensionMismatch {
                expected: diag.len() - 1,
                found: offdiag.len(),
            });
        }
        Ok(Self { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// `out = M v`
    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.offdiag[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += self.offdiag[i] * v[i + 1];
            }
            out[i] = acc;
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.offdiag[i];
                m[(i + 1, i)] = self.offdiag[i];
            }
        }
        m
    }
}

/// Full eigendecomposition of a symmetric tridiagonal matrix by implicit-shift QL.
pub fn sym_tridiag_eigen(m: &SymTridiag) -> Result<EigenDecomposition> {
    let n = m.dim();
    let mut d = m.diag.clone();
    let mut e = m.offdiag.clone();
    e.push(0.0);
    let mut basis = vec![0.0; n * n];
    for k in 0..n {
        basis[k * n + k] = 1.0;
    }
    implicit_ql(&mut d, &mut e, &mut basis)?;
    Ok(sorted(d, basis))
}

/// Implicit-shift QL iteration on the tridiagonal `(d, e)`, where `e[i]`
/// couples `i` and `i+1` and `e[n-1]` is scratch.
///
/// `basis` holds the columns of the accumulated transformation as contiguous
/// rows (`basis[k*n..]` is column `k`); on return row `k` is the eigenvector
/// belonging to `d[k]`. Deflation uses `|e_i| <= eps (|d_i| + |d_{i+1}|)`.
pub(crate) fn implicit_ql(d: &mut [f64], e: &mut [f64], basis: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let stride = basis.len() / n;
    let cap = 50 * n;
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > cap {
                return Err(Error::NoConvergence {
                    what: "implicit QL",
                    iterations: cap,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                rotate_rows(basis, stride, i, c, s);
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Applies the plane rotation to columns `i`, `i+1` of the transformation,
/// which are rows `i`, `i+1` of `basis`.
#[inline]
fn rotate_rows(basis: &mut [f64], stride: usize, i: usize, c: f64, s: f64) {
    let (lo, hi) = basis[i * stride..(i + 2) * stride].split_at_mut(stride);
    for (zi, zi1) in lo.iter_mut().zip(hi.iter_mut()) {
        let f = *zi1;
        *zi1 = s * *zi + c * f;
        *zi = c * *zi - s * f;
    }
}

/// Sorts eigenpairs ascending.
pub(crate) fn sorted(values: Vec<f64>, basis: Vec<f64>) -> EigenDecomposition {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    if order.iter().enumerate().all(|(k, &o)| k == o) {
        return EigenDecomposition::from_parts(values, basis);
    }
    let stride = basis.len() / n.max(1);
    let mut new_values = Vec::with_capacity(n);
    let mut new_basis = Vec::with_capacity(basis.len());
    for &o in &order {
        new_values.push(values[o]);
        new_basis.extend_from_slice(&basis[o * stride..(o + 1) * stride]);
    }
    EigenDecomposition::from_parts(new_values, new_basis)
}
