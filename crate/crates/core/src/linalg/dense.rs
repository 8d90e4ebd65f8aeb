use super::tridiag::{implicit_ql, sorted};
use super::{axpy, dot, DenseMatrix, EigenDecomposition};
use crate::error::{Error, Result};

/// Largest dense eigensolve allowed unless the caller raises the cap.
pub const DEFAULT_DIMENSION_CAP: usize = 4500;

/// Above this dimension `EigenBackend::Auto` hands the work to faer, whose
/// blocked reduction is several times faster than the unblocked native path.
const NATIVE_AUTO_LIMIT: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenBackend {
    /// Householder tridiagonalization followed by implicit-shift QL.
    Native,
    /// faer's self-adjoint eigensolver.
    Faer,
    #[default]
    Auto,
}

/// Eigendecomposition of a dense symmetric matrix with the default backend and cap.
pub fn dense_sym_eigen(m: &DenseMatrix) -> Result<EigenDecomposition> {
    dense_sym_eigen_with(m, EigenBackend::Auto, DEFAULT_DIMENSION_CAP)
}

pub fn dense_sym_eigen_with(
    m: &DenseMatrix,
    backend: EigenBackend,
    cap: usize,
) -> Result<EigenDecomposition> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.cols(),
        });
    }
    if n > cap {
        return Err(Error::DimensionCapExceeded { dim: n, cap });
    }
    let asym = m.asymmetry();
    if asym > 1e-13 * m.max_abs() {
        return Err(Error::NotSymmetric(asym));
    }
    if n == 0 {
        return Ok(EigenDecomposition::from_parts(vec![], vec![]));
    }
    let use_native = match backend {
        EigenBackend::Native => true,
        EigenBackend::Faer => false,
        EigenBackend::Auto => n <= NATIVE_AUTO_LIMIT,
    };
    if use_native {
        native(m)
    } else {
        with_faer(m)
    }
}

fn native(m: &DenseMatrix) -> Result<EigenDecomposition> {
    let n = m.rows();
    let (mut d, mut e, mut basis) = tridiagonalize(m);
    // e[i] couples i-1 and i after the reduction; QL wants it to couple i and i+1
    e.remove(0);
    e.push(0.0);
    implicit_ql(&mut d, &mut e, &mut basis)?;
    let eig = sorted(d, basis);
    if eig.eigenvalues().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("dense eigensolve"));
    }
    debug_assert_eq!(eig.dim(), n);
    Ok(eig)
}

/// Householder reduction `M = Q T Qᵀ` working on the lower triangle.
///
/// Returns the diagonal of `T`, its subdiagonal (`e[i]` couples `i-1` and `i`,
/// `e[0] = 0`) and `Qᵀ` in row-major order, i.e. the columns of `Q` as rows.
fn tridiagonalize(m: &DenseMatrix) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = m.rows();
    let mut a = m.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut hs = vec![0.0; n];
    let mut p = vec![0.0; n];

    for i in (1..n).rev() {
        let l = i - 1;
        let (head, tail) = a.split_at_mut(i * n);
        let u = &mut tail[..=l];
        if l == 0 {
            e[i] = u[0];
            continue;
        }
        let scale: f64 = u.iter().map(|x| x.abs()).sum();
        if scale == 0.0 {
            e[i] = u[l];
            continue;
        }
        for x in u.iter_mut() {
            *x /= scale;
        }
        let sigma = dot(u, u);
        let f = u[l];
        let g = if f >= 0.0 { -sigma.sqrt() } else { sigma.sqrt() };
        e[i] = scale * g;
        let h = sigma - f * g;
        u[l] = f - g;
        hs[i] = h;

        // p = A u / h over the leading (l+1)-block, lower triangle only
        let p = &mut p[..=l];
        p.fill(0.0);
        for k in 0..=l {
            let row = &head[k * n..k * n + k];
            p[k] += dot(row, &u[..k]) + head[k * n + k] * u[k];
            axpy(u[k], row, &mut p[..k]);
        }
        for x in p.iter_mut() {
            *x /= h;
        }
        let kk = dot(u, p) / (2.0 * h);
        for (pi, ui) in p.iter_mut().zip(u.iter()) {
            *pi -= kk * ui;
        }
        // A -= u qᵀ + q uᵀ
        for k in 0..=l {
            let row = &mut head[k * n..k * n + k + 1];
            let (uk, qk) = (u[k], p[k]);
            for (j, x) in row.iter_mut().enumerate() {
                *x -= uk * p[j] + qk * u[j];
            }
        }
    }
    for i in 0..n {
        d[i] = a[i * n + i];
    }

    // Qᵀ = P_1 P_2 ... P_{n-1}, built by right-multiplication so every
    // update runs along rows.
    let mut qt = vec![0.0; n * n];
    for k in 0..n {
        qt[k * n + k] = 1.0;
    }
    let mut w = vec![0.0; n];
    for i in 1..n {
        let h = hs[i];
        if h == 0.0 {
            continue;
        }
        let u = &a[i * n..i * n + i];
        for k in 0..i {
            w[k] = dot(&qt[k * n..k * n + i], u) / h;
        }
        for k in 0..i {
            axpy(-w[k], u, &mut qt[k * n..k * n + i]);
        }
    }
    (d, e, qt)
}

fn with_faer(m: &DenseMatrix) -> Result<EigenDecomposition> {
    let n = m.rows();
    let mat = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    let evd = mat.selfadjoint_eigendecomposition(faer::Side::Lower);
    let s = evd.s().column_vector();
    let u = evd.u();
    let values: Vec<f64> = (0..n).map(|k| s.read(k)).collect();
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("dense eigensolve"));
    }
    let mut basis = Vec::with_capacity(n * n);
    for k in 0..n {
        basis.extend((0..n).map(|i| u.read(i, k)));
    }
    Ok(sorted(values, basis))
}
