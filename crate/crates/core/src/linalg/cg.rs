use super::{axpy, dot, norm2, DiscreteOperator};
use crate::error::{Error, Result};

pub const CG_DEFAULT_TOL: f64 = 1e-12;

/// Solves `op x = rhs` for a negative definite `op` by conjugate gradients on
/// `-op`. Stops once `‖op x - rhs‖ ≤ tol ‖rhs‖`.
pub fn cg_solve(op: &DiscreteOperator, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = op.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(Error::InvalidConfig(format!(
            "CG tolerance must lie in (0, 1e-2], got {tol}"
        )));
    }
    let mut x = vec![0.0; n];
    let rhs_norm = norm2(rhs);
    if rhs_norm == 0.0 {
        return Ok(x);
    }
    // work with the SPD system (-op) x = -rhs; residual r = -rhs - (-op) x
    let mut r: Vec<f64> = rhs.iter().map(|v| -v).collect();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let target = tol * rhs_norm;
    let max_iter = 10 * n.max(1);
    for _ in 0..max_iter {
        if rr.sqrt() <= target {
            return Ok(x);
        }
        op.apply_into(&p, &mut ap);
        for v in ap.iter_mut() {
            *v = -*v;
        }
        let alpha = rr / dot(&p, &ap);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    if rr.sqrt() <= target {
        return Ok(x);
    }
    Err(Error::NoConvergence {
        what: "conjugate gradient",
        iterations: max_iter,
    })
}
