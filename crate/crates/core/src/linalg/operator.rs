use std::sync::{Mutex, OnceLock};

use super::{dense_sym_eigen_with, DenseMatrix, EigenBackend, EigenDecomposition, DEFAULT_DIMENSION_CAP};
use crate::error::{Error, Result};

/// A symmetric operator held densely, with a compressed-row copy for fast
/// products and a lazily computed eigendecomposition.
#[derive(Debug)]
pub struct DiscreteOperator {
    dense: DenseMatrix,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    eigen: OnceLock<EigenDecomposition>,
    decomposing: Mutex<()>,
}

impl DiscreteOperator {
    /// Wraps a square matrix; rejects anything that is not exactly symmetric.
    pub fn from_dense(dense: DenseMatrix) -> Result<Self> {
        let n = dense.rows();
        if dense.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: dense.cols(),
            });
        }
        let asym = dense.asymmetry();
        if asym != 0.0 {
            return Err(Error::NotSymmetric(asym));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for (j, &v) in dense.row(i).iter().enumerate() {
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            dense,
            row_ptr,
            cols,
            vals,
            eigen: OnceLock::new(),
            decomposing: Mutex::new(()),
        })
    }

    pub fn dim(&self) -> usize {
        self.dense.rows()
    }

    pub fn dense(&self) -> &DenseMatrix {
        &self.dense
    }

    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let range = self.row_ptr[i]..self.row_ptr[i + 1];
            *o = self.cols[range.clone()]
                .iter()
                .zip(&self.vals[range])
                .map(|(&j, &a)| a * v[j])
                .sum();
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(v, &mut out);
        out
    }

    /// The cached decomposition, if one has been computed.
    pub fn eigen(&self) -> Option<&EigenDecomposition> {
        self.eigen.get()
    }

    /// Computes (once) and returns the eigendecomposition.
    pub fn decompose(&self) -> Result<&EigenDecomposition> {
        self.decompose_with(EigenBackend::Auto, DEFAULT_DIMENSION_CAP)
    }

    pub fn decompose_with(&self, backend: EigenBackend, cap: usize) -> Result<&EigenDecomposition> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let _guard = self.decomposing.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let computed = dense_sym_eigen_with(&self.dense, backend, cap)?;
        let _ = self.eigen.set(computed);
        Ok(self.eigen.get().expect("initialized above"))
    }
}
