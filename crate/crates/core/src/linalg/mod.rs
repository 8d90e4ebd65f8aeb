//! Symmetric eigensolvers, spectral matrix functions and a conjugate-gradient
//! solver. Everything here works on real symmetric matrices.

mod cg;
mod dense;
mod operator;
mod phi;
mod tridiag;

pub use cg::{cg_solve, CG_DEFAULT_TOL};
pub use dense::{dense_sym_eigen, dense_sym_eigen_with, EigenBackend, DEFAULT_DIMENSION_CAP};
pub use operator::DiscreteOperator;
pub use phi::{exp_action, phi, phi_action, spectral_apply};
pub use tridiag::{sym_tridiag_eigen, SymTridiag};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major buffer has wrong length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `out = self * v`
    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = dot(row, v);
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.matvec_into(v, &mut out);
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &aik) in self.row(i).iter().enumerate() {
                if aik != 0.0 {
                    axpy(aik, other.row(k), out_row);
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest entry of `|self - selfᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Full eigendecomposition `M = Q Λ Qᵀ` of a symmetric matrix.
///
/// Eigenvalues are ascending. Eigenvectors are stored contiguously, one per
/// row of an internal buffer, so both `Qᵀv` and `Qy` run over contiguous
/// memory.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    values: Vec<f64>,
    vectors: Vec<f64>,
}

impl EigenDecomposition {
    /// `vectors` holds eigenvector `k` at `vectors[k*n..(k+1)*n]`.
    pub(crate) fn from_parts(values: Vec<f64>, vectors: Vec<f64>) -> Self {
        debug_assert_eq!(values.len() * values.len(), vectors.len());
        Self { values, vectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn eigenvector(&self, k: usize) -> &[f64] {
        let n = self.dim();
        &self.vectors[k * n..(k + 1) * n]
    }

    /// `Q[i][k]`: component `i` of eigenvector `k`.
    pub fn q(&self, i: usize, k: usize) -> f64 {
        self.vectors[k * self.dim() + i]
    }

    /// Eigenvector matrix `Q` with eigenvector `k` in column `k`.
    pub fn eigenvector_matrix(&self) -> DenseMatrix {
        let n = self.dim();
        DenseMatrix::from_fn(n, n, |i, k| self.q(i, k))
    }

    /// Coefficients `Qᵀv`.
    pub fn to_eigenbasis(&self, v: &[f64]) -> Vec<f64> {
        self.vectors
            .chunks_exact(self.dim().max(1))
            .map(|q| dot(q, v))
            .collect()
    }

    /// `Q c` for coefficients `c`.
    pub fn from_eigenbasis(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for (q, &c) in self.vectors.chunks_exact(n.max(1)).zip(coeffs) {
            if c != 0.0 {
                axpy(c, q, &mut out);
            }
        }
        out
    }

    /// `max |QᵀQ - I|`
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..=a {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot(self.eigenvector(a), self.eigenvector(b)) - target).abs());
            }
        }
        worst
    }

    /// `max |QΛQᵀ - M|`
    pub fn reconstruction_residual(&self, m: &DenseMatrix) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.q(i, k) * self.values[k] * self.q(j, k);
                }
                worst = worst.max((acc - m[(i, j)]).abs());
            }
        }
        worst
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}
