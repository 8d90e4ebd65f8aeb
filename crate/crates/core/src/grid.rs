//! Uniform grids on the unit square and the symmetric finite-difference
//! discretization of `∂x(a ∂x)` and `∂y(b ∂y)` with homogeneous Dirichlet
//! conditions.
//!
//! Grid functions are stored row-major: node `(i, j)` lives at `j * nx + i`,
//! so x-lines are contiguous and y-lines are strided by `nx`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_tridiag_eigen, DenseMatrix, DiscreteOperator, EigenDecomposition, SymTridiag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    nx: usize,
    ny: usize,
}

impl Grid {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidGrid { nx, ny });
        }
        Ok(Self { nx, ny })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.nx as f64 + 1.0)
    }

    pub fn dy(&self) -> f64 {
        1.0 / (self.ny as f64 + 1.0)
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        (j as f64 + 1.0) * self.dy()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Samples `f(x, y)` at the interior nodes.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let mut values = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            let y = self.y(j);
            for i in 0..self.nx {
                values.push(f(self.x(i), y));
            }
        }
        GridFunction {
            grid: *self,
            values,
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.nx, self.ny)
    }
}

/// Values of a scalar field on the interior nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid function"));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn ensure_grid(&self, grid: Grid) -> Result<()> {
        if self.grid != grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &GridFunction) -> Result<()> {
        other.ensure_grid(self.grid)?;
        crate::linalg::axpy(alpha, &other.values, &mut self.values);
        Ok(())
    }

    pub fn scaled(&self, alpha: f64) -> GridFunction {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        other.ensure_grid(self.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn euclidean_norm(&self) -> f64 {
        crate::linalg::norm2(&self.values)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Diffusion coefficients `a(x, y)` (x-direction) and `b(x, y)` (y-direction).
#[derive(Clone)]
pub struct CoefficientField {
    a: Field,
    b: Field,
}

impl CoefficientField {
    pub fn new(
        a: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        b: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            a: Arc::new(a),
            b: Arc::new(b),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_, _| c, move |_, _| c)
    }

    pub fn a(&self, x: f64, y: f64) -> f64 {
        (self.a)(x, y)
    }

    pub fn b(&self, x: f64, y: f64) -> f64 {
        (self.b)(x, y)
    }
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CoefficientField { .. }")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    X,
    Y,
}

/// One split operator (`A` for `Direction::X`, `B` for `Direction::Y`) as a
/// family of symmetric tridiagonal matrices, one per grid line.
#[derive(Debug)]
pub struct LineOperatorFamily {
    grid: Grid,
    direction: Direction,
    lines: Vec<SymTridiag>,
    /// Stencil weights of the two boundary neighbours of each line,
    /// already divided by the squared spacing.
    boundary: Vec<[f64; 2]>,
    eigen: OnceLock<Vec<EigenDecomposition>>,
}

impl LineOperatorFamily {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn lines(&self) -> &[SymTridiag] {
        &self.lines
    }

    pub fn boundary_weights(&self) -> &[[f64; 2]] {
        &self.boundary
    }

    /// Number of nodes along one line.
    pub fn line_len(&self) -> usize {
        match self.direction {
            Direction::X => self.grid.nx,
            Direction::Y => self.grid.ny,
        }
    }

    /// Flat index of node `k` on line `line`.
    #[inline]
    pub fn node(&self, line: usize, k: usize) -> usize {
        match self.direction {
            Direction::X => self.grid.index(k, line),
            Direction::Y => self.grid.index(line, k),
        }
    }

    /// Per-line eigendecompositions, computed on first use.
    pub fn eigen(&self) -> Result<&[EigenDecomposition]> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let computed = self
            .lines
            .iter()
            .map(sym_tridiag_eigen)
            .collect::<Result<Vec<_>>>()?;
        let _ = self.eigen.set(computed);
        Ok(self.eigen.get().expect("initialized above"))
    }

    /// Dense matrices `Q_l f(Λ_l) Q_lᵀ` for every line.
    pub fn line_functions(&self, f: impl Fn(f64) -> f64) -> Result<Vec<DenseMatrix>> {
        let eig = self.eigen()?;
        Ok(eig
            .iter()
            .map(|e| {
                let n = e.dim();
                let fl: Vec<f64> = e.eigenvalues().iter().map(|&l| f(l)).collect();
                let mut m = DenseMatrix::zeros(n, n);
                for k in 0..n {
                    let q = e.eigenvector(k);
                    for i in 0..n {
                        let s = fl[k] * q[i];
                        let row = m.row_mut(i);
                        for (r, qj) in row.iter_mut().zip(q) {
                            *r += s * qj;
                        }
                    }
                }
                m
            })
            .collect())
    }

    /// The exponential `e^{tM}` of this split operator as per-line dense matrices.
    pub fn propagator(&self, t: f64) -> Result<LinePropagator> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "propagator time must be finite and non-negative, got {t}"
            )));
        }
        Ok(LinePropagator {
            grid: self.grid,
            direction: self.direction,
            time: t,
            mats: self.line_functions(|l| (t * l).exp())?,
        })
    }

    /// `e^{tM} u` line by line through the cached eigendecompositions.
    pub fn exp_apply(&self, t: f64, u: &GridFunction) -> Result<GridFunction> {
        u.ensure_grid(self.grid)?;
        let eig = self.eigen()?;
        let len = self.line_len();
        let mut out = vec![0.0; u.values.len()];
        let mut buf = vec![0.0; len];
        for (line, e) in eig.iter().enumerate() {
            for k in 0..len {
                buf[k] = u.values[self.node(line, k)];
            }
            let y = crate::linalg::exp_action(e, t, &buf)?;
            for k in 0..len {
                out[self.node(line, k)] = y[k];
            }
        }
        Ok(GridFunction::from_vec_unchecked(self.grid, out))
    }
}

/// Precomputed `e^{tA}` or `e^{tB}` for one time `t`.
#[derive(Debug, Clone)]
pub struct LinePropagator {
    grid: Grid,
    direction: Direction,
    time: f64,
    mats: Vec<DenseMatrix>,
}

impl LinePropagator {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        u.ensure_grid(self.grid)?;
        let mut out = vec![0.0; u.values.len()];
        self.apply_slice(&u.values, &mut out);
        Ok(GridFunction::from_vec_unchecked(self.grid, out))
    }

    pub(crate) fn apply_slice(&self, u: &[f64], out: &mut [f64]) {
        let len = match self.direction {
            Direction::X => self.grid.nx,
            Direction::Y => self.grid.ny,
        };
        match self.direction {
            Direction::X => {
                for (line, m) in self.mats.iter().enumerate() {
                    let s = line * len;
                    m.matvec_into(&u[s..s + len], &mut out[s..s + len]);
                }
            }
            Direction::Y => {
                let nx = self.grid.nx;
                let mut buf_in = vec![0.0; len];
                let mut buf_out = vec![0.0; len];
                for (line, m) in self.mats.iter().enumerate() {
                    for k in 0..len {
                        buf_in[k] = u[k * nx + line];
                    }
                    m.matvec_into(&buf_in, &mut buf_out);
                    for k in 0..len {
                        out[k * nx + line] = buf_out[k];
                    }
                }
            }
        }
    }
}

/// Builds the split operator for one direction with coefficients sampled at
/// half nodes: row `k` of a line is `[c_{k-1/2}, -(c_{k-1/2} + c_{k+1/2}), c_{k+1/2}] / h²`.
pub fn build_line_operator(
    coeff: &CoefficientField,
    grid: Grid,
    direction: Direction,
) -> Result<LineOperatorFamily> {
    let (n_lines, len, h) = match direction {
        Direction::X => (grid.ny, grid.nx, grid.dx()),
        Direction::Y => (grid.nx, grid.ny, grid.dy()),
    };
    let h2 = h * h;
    let mut lines = Vec::with_capacity(n_lines);
    let mut boundary = Vec::with_capacity(n_lines);
    for line in 0..n_lines {
        // half-node samples c_{k+1/2} for k = -1..len-1
        let mut half = Vec::with_capacity(len + 1);
        for k in 0..=len {
            let s = (k as f64 + 0.5) * h;
            let (x, y, which, value) = match direction {
                Direction::X => {
                    let y = grid.y(line);
                    (s, y, 'a', coeff.a(s, y))
                }
                Direction::Y => {
                    let x = grid.x(line);
                    (x, s, 'b', coeff.b(x, s))
                }
            };
            if !(value > 0.0) {
                return Err(Error::NonPositiveCoefficient { which, x, y, value });
            }
            half.push(value);
        }
        let diag: Vec<f64> = (0..len).map(|k| -(half[k] + half[k + 1]) / h2).collect();
        let off: Vec<f64> = (1..len).map(|k| half[k] / h2).collect();
        lines.push(SymTridiag::new(diag, off)?);
        boundary.push([half[0] / h2, half[len] / h2]);
    }
    Ok(LineOperatorFamily {
        grid,
        direction,
        lines,
        boundary,
        eigen: OnceLock::new(),
    })
}

/// `A u` (or `B u`) line by line.
pub fn apply_split_operator(family: &LineOperatorFamily, u: &GridFunction) -> Result<GridFunction> {
    u.ensure_grid(family.grid)?;
    let mut out = vec![0.0; u.values.len()];
    apply_split_into(family, &u.values, &mut out);
    Ok(GridFunction::from_vec_unchecked(family.grid, out))
}

pub(crate) fn apply_split_into(family: &LineOperatorFamily, u: &[f64], out: &mut [f64]) {
    let len = family.line_len();
    for (line, m) in family.lines.iter().enumerate() {
        for k in 0..len {
            let mut acc = m.diag()[k] * u[family.node(line, k)];
            if k > 0 {
                acc += m.offdiag()[k - 1] * u[family.node(line, k - 1)];
            }
            if k + 1 < len {
                acc += m.offdiag()[k] * u[family.node(line, k + 1)];
            }
            out[family.node(line, k)] = acc;
        }
    }
}

/// Assembles `L = A + B` as one symmetric matrix.
pub fn assemble_full_operator(
    a_family: &LineOperatorFamily,
    b_family: &LineOperatorFamily,
) -> Result<DiscreteOperator> {
    if a_family.grid != b_family.grid {
        return Err(Error::GridMismatch);
    }
    let n = a_family.grid.len();
    let mut m = DenseMatrix::zeros(n, n);
    for family in [a_family, b_family] {
        let len = family.line_len();
        for (line, t) in family.lines.iter().enumerate() {
            for k in 0..len {
                let p = family.node(line, k);
                m[(p, p)] += t.diag()[k];
                if k + 1 < len {
                    let q = family.node(line, k + 1);
                    m[(p, q)] += t.offdiag()[k];
                    m[(q, p)] += t.offdiag()[k];
                }
            }
        }
    }
    DiscreteOperator::from_dense(m)
}

/// Stencil contributions of Dirichlet data `trace(x, y)` on ∂Ω to the
/// boundary-adjacent interior nodes, i.e. the columns of the extended
/// operator that multiply boundary values.
pub fn boundary_coupling_vector(
    a_family: &LineOperatorFamily,
    b_family: &LineOperatorFamily,
    trace: impl Fn(f64, f64) -> f64,
) -> Result<GridFunction> {
    if a_family.grid != b_family.grid {
        return Err(Error::GridMismatch);
    }
    let grid = a_family.grid;
    let mut out = vec![0.0; grid.len()];
    for family in [a_family, b_family] {
        let len = family.line_len();
        for (line, w) in family.boundary.iter().enumerate() {
            let (lo, hi) = match family.direction {
                Direction::X => {
                    let y = grid.y(line);
                    ((0.0, y), (1.0, y))
                }
                Direction::Y => {
                    let x = grid.x(line);
                    ((x, 0.0), (x, 1.0))
                }
            };
            out[family.node(line, 0)] += w[0] * trace(lo.0, lo.1);
            out[family.node(line, len - 1)] += w[1] * trace(hi.0, hi.1);
        }
    }
    GridFunction::new(grid, out)
}
