//! Dense reference computations that share no code with the library's
//! eigensolvers or stencil assembly.

#![allow(dead_code)]

pub type Matrix = Vec<Vec<f64>>;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns the
/// eigenvalues and the eigenvectors as columns.
pub fn jacobi_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.len();
    let mut a = m.clone();
    let mut v: Matrix = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// `Q f(Λ) Qᵀ` for a symmetric matrix.
pub fn sym_fn(m: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let (vals, vecs) = jacobi_eigen(m);
    let n = m.len();
    let fv: Vec<f64> = vals.iter().map(|&l| f(l)).collect();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| vecs[i][k] * fv[k] * vecs[j][k]).sum()).collect())
        .collect()
}

pub fn expm_sym(m: &Matrix, t: f64) -> Matrix {
    sym_fn(m, |l| (t * l).exp())
}

pub fn matvec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn add(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// The `x`-direction and `y`-direction diffusion matrices on the interior of
/// an `nx × ny` grid of the unit square, row-major with `x` fastest,
/// coefficients sampled midway between nodes.
pub fn split_matrices(
    nx: usize,
    ny: usize,
    a: impl Fn(f64, f64) -> f64,
    b: impl Fn(f64, f64) -> f64,
) -> (Matrix, Matrix) {
    let n = nx * ny;
    let (dx, dy) = (1.0 / (nx + 1) as f64, 1.0 / (ny + 1) as f64);
    let mut am = vec![vec![0.0; n]; n];
    let mut bm = vec![vec![0.0; n]; n];
    for j in 0..ny {
        for i in 0..nx {
            let p = j * nx + i;
            let (x, y) = ((i + 1) as f64 * dx, (j + 1) as f64 * dy);
            let (w, e) = (a(x - dx / 2.0, y), a(x + dx / 2.0, y));
            am[p][p] = -(w + e) / (dx * dx);
            if i > 0 {
                am[p][p - 1] = w / (dx * dx);
            }
            if i + 1 < nx {
                am[p][p + 1] = e / (dx * dx);
            }
            let (s, nn) = (b(x, y - dy / 2.0), b(x, y + dy / 2.0));
            bm[p][p] = -(s + nn) / (dy * dy);
            if j > 0 {
                bm[p][p - nx] = s / (dy * dy);
            }
            if j + 1 < ny {
                bm[p][p + nx] = nn / (dy * dy);
            }
        }
    }
    (am, bm)
}

pub fn sum(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
}
