//! Self-checks on tiny grids against dense matrix exponentials, backing the
//! `verify` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::grid::{build_line_operator, CoefficientField, Direction, Grid, GridFunction, LineOperatorFamily};
use crate::integrators::{
    integrate, lie_step, reference_solve, strang_b_step, strang_step, SplittingScheme, TimeGrid,
};
use crate::linalg::{dense_sym_eigen, phi_action, DenseMatrix};
use crate::norms::{dual_norm, dual_norm_cg, smoothing_probe};
use crate::problems::{example_inhomogeneous_bc, problem_by_label, DiscreteProblem};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `e^M` by scaling and squaring of a truncated Taylor series.
pub fn dense_expm(m: &DenseMatrix) -> DenseMatrix {
    let n = m.rows();
    let norm = (0..n)
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    while norm / 2f64.powi(squarings) > 0.25 {
        squarings += 1;
    }
    let scale = 2f64.powi(-squarings);
    let scaled = DenseMatrix::from_fn(n, n, |i, j| m[(i, j)] * scale);
    let mut sum = DenseMatrix::identity(n);
    let mut term = DenseMatrix::identity(n);
    for k in 1..=18 {
        term = term.matmul(&scaled);
        let inv = 1.0 / k as f64;
        for i in 0..n {
            for j in 0..n {
                term[(i, j)] *= inv;
                sum[(i, j)] += term[(i, j)];
            }
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

fn split_matrix(family: &LineOperatorFamily) -> DenseMatrix {
    let n = family.grid().len();
    let mut m = DenseMatrix::zeros(n, n);
    for (line, t) in family.lines().iter().enumerate() {
        for k in 0..family.line_len() {
            let p = family.node(line, k);
            m[(p, p)] = t.diag()[k];
            if k + 1 < family.line_len() {
                let q = family.node(line, k + 1);
                m[(p, q)] = t.offdiag()[k];
                m[(q, p)] = t.offdiag()[k];
            }
        }
    }
    m
}

fn scaled(m: &DenseMatrix, s: f64) -> DenseMatrix {
    DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| s * m[(i, j)])
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn add(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

fn check(name: &str, worst: f64, tol: f64) -> Check {
    Check {
        name: name.into(),
        passed: worst <= tol,
        detail: format!("max deviation {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn splitting_steps(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let coeff = CoefficientField::new(|x, y| 2.0 * x * y + 3.0, |x, y| 2.0 * x * y.powi(4) + 1.0);
    let mut worst = [0.0f64; 3];
    for (nx, ny) in [(3, 3), (4, 6), (6, 5)] {
        let grid = Grid::new(nx, ny)?;
        let a = build_line_operator(&coeff, grid, Direction::X)?;
        let b = build_line_operator(&coeff, grid, Direction::Y)?;
        let (am, bm) = (split_matrix(&a), split_matrix(&b));
        for _ in 0..5 {
            let h = rng.gen_range(1e-3..0.2);
            let u = random_vec(rng, grid.len());
            let g0 = random_vec(rng, grid.len());
            let g1 = random_vec(rng, grid.len());
            let ea = dense_expm(&scaled(&am, h));
            let eb = dense_expm(&scaled(&bm, h));
            let ea2 = dense_expm(&scaled(&am, h / 2.0));
            let eb2 = dense_expm(&scaled(&bm, h / 2.0));
            let gf = |v: &[f64]| GridFunction::new(grid, v.to_vec());
            let (uf, g0f, g1f) = (gf(&u)?, gf(&g0)?, gf(&g1)?);

            let lie = ea.matvec(&eb.matvec(&add(&u, &g0, h)));
            let strang_inner = add(&eb2.matvec(&ea2.matvec(&u)), &g0, h);
            let strang = ea2.matvec(&eb2.matvec(&strang_inner));
            let strang_b = add(
                &ea2.matvec(&eb.matvec(&ea2.matvec(&add(&u, &g0, h / 2.0)))),
                &g1,
                h / 2.0,
            );
            let got = [
                lie_step(&a, &b, h, &uf, &g0f)?,
                strang_step(&a, &b, h, &uf, &g0f)?,
                strang_b_step(&a, &b, h, &uf, &g0f, &g1f)?,
            ];
            for (w, (g, e)) in worst.iter_mut().zip(got.iter().zip([lie, strang, strang_b])) {
                *w = w.max(max_diff(g.values(), &e));
            }
        }
    }
    Ok(["lie step", "strang step", "strang b step"]
        .iter()
        .zip(worst)
        .map(|(name, w)| check(&format!("{name} vs dense exponentials"), w, 1e-10))
        .collect())
}

fn commuting_exactness() -> Result<Check> {
    let spec = problem_by_label("manufactured:commuting")?;
    let problem = DiscreteProblem::new(&spec, Grid::square(6)?)?;
    let l = problem.operator().dense().clone();
    let exact = dense_expm(&scaled(&l, 0.3)).matvec(problem.initial().values());
    let mut worst = 0.0f64;
    for scheme in SplittingScheme::ALL {
        for steps in [1, 3, 10] {
            let u = integrate(scheme, &problem, TimeGrid::new(0.3, steps)?)?;
            worst = worst.max(max_diff(u.values(), &exact));
        }
    }
    Ok(check("commuting operators split exactly", worst, 1e-10))
}

fn phi_recurrence(rng: &mut ChaCha8Rng) -> Result<Check> {
    let n = 12;
    let r = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let rt = r.transpose();
    let m = DenseMatrix::from_fn(n, n, |i, j| {
        let s = (r[(i, j)] + rt[(i, j)]) / 2.0;
        if i == j {
            s - 2.0 * n as f64
        } else {
            s
        }
    });
    let eig = dense_sym_eigen(&m)?;
    let v = random_vec(rng, n);
    let t = 0.37;
    let mut worst = 0.0f64;
    let factorial = [1.0, 1.0, 2.0];
    for j in 0..3 {
        let lhs = phi_action(&eig, j, t, &v)?;
        let next = phi_action(&eig, j + 1, t, &v)?;
        let mv = m.matvec(&next);
        let rhs: Vec<f64> = v
            .iter()
            .zip(&mv)
            .map(|(vi, mi)| vi / factorial[j] + t * mi)
            .collect();
        worst = worst.max(max_diff(&lhs, &rhs));
    }
    let scale = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(check("phi recurrence", worst / scale, 1e-11))
}

fn reference_against_closed_form() -> Result<Check> {
    // constant forcing: u(T) = e^{TL} u0 + L⁻¹ (e^{TL} - I) g
    let problem = DiscreteProblem::new(&example_inhomogeneous_bc(), Grid::square(5)?)?;
    let l = problem.operator();
    let big_t = 0.2;
    let e = dense_expm(&scaled(l.dense(), big_t));
    let g = problem.forcing(0, 0.0)?;
    let eg = e.matvec(g.values());
    let rhs: Vec<f64> = eg.iter().zip(g.values()).map(|(a, b)| a - b).collect();
    let inv = crate::linalg::cg_solve(l, &rhs, 1e-13)?;
    let exact = add(&e.matvec(problem.initial().values()), &inv, 1.0);
    let got = reference_solve(l, &problem, TimeGrid::new(big_t, 7)?)?;
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(check(
        "reference integrator vs closed form",
        max_diff(got.values(), &exact) / scale,
        1e-10,
    ))
}

fn dual_norm_routes(rng: &mut ChaCha8Rng) -> Result<Check> {
    let problem = DiscreteProblem::new(&problem_by_label("example1")?, Grid::square(6)?)?;
    let l = problem.operator();
    let u = GridFunction::new(problem.grid(), random_vec(rng, problem.grid().len()))?;
    let cg = dual_norm_cg(l, &u)?;
    l.decompose()?;
    let spectral = dual_norm(l, &u)?;
    Ok(check("dual norm, spectral vs CG", (cg - spectral).abs() / spectral, 1e-10))
}

fn contraction() -> Result<Check> {
    let problem = DiscreteProblem::new(&problem_by_label("example1")?, Grid::square(6)?)?;
    let mut worst = 0.0f64;
    for scheme in [SplittingScheme::Lie, SplittingScheme::Strang] {
        for h in [0.5, 0.01] {
            for (_, est) in smoothing_probe(problem.a(), problem.b(), problem.operator(), 0.0, scheme, h, 4)? {
                worst = worst.max(est);
            }
        }
    }
    Ok(Check {
        name: "splitting products are contractions".into(),
        passed: worst <= 1.0 + 1e-8,
        detail: format!("largest norm estimate {worst:.12}"),
    })
}

/// Runs every check; solver failures are reported as failed checks.
pub fn run_verification() -> VerificationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(20_241_016);
    let mut checks = Vec::new();
    let mut push = |name: &str, r: Result<Vec<Check>>| match r {
        Ok(c) => checks.extend(c),
        Err(e) => checks.push(Check {
            name: name.into(),
            passed: false,
            detail: e.to_string(),
        }),
    };
    push("splitting steps", splitting_steps(&mut rng));
    push("commuting", commuting_exactness().map(|c| vec![c]));
    push("phi recurrence", phi_recurrence(&mut rng).map(|c| vec![c]));
    push("reference", reference_against_closed_form().map(|c| vec![c]));
    push("dual norm", dual_norm_routes(&mut rng).map(|c| vec![c]));
    push("contraction", contraction().map(|c| vec![c]));
    VerificationReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_diagonal() {
        let m = DenseMatrix::from_fn(3, 3, |i, j| if i == j { -(i as f64) * 7.0 } else { 0.0 });
        let e = dense_expm(&m);
        for i in 0..3 {
            assert!((e[(i, i)] - (-(i as f64) * 7.0).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t = 1.3;
        let m = DenseMatrix::from_row_major(2, 2, vec![0.0, -t, t, 0.0]);
        let e = dense_expm(&m);
        assert!((e[(0, 0)] - t.cos()).abs() < 1e-13);
        assert!((e[(1, 0)] - t.sin()).abs() < 1e-13);
    }

    #[test]
    fn all_checks_pass() {
        let report = run_verification();
        for c in &report.checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
        assert_eq!(report.checks.len(), 8);
    }
}
