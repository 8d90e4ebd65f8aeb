//! Acceptance suite: one pass/fail line per criterion, non-zero exit if any
//! criterion fails.

mod oracle;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use expsplit_core::grid::{build_line_operator, Direction};
use expsplit_core::integrators::{lie_step, strang_b_step, strang_step};
use expsplit_core::linalg::{dense_sym_eigen, phi_action, DenseMatrix};
use expsplit_core::norms::smoothing_probe;
use expsplit_core::problems::Formulation;
use expsplit_core::{
    integrate, problem_by_label, CoefficientField, ConvergenceReport, DiscreteProblem, Error, Grid,
    GridFunction, NormKind, ProblemSpec, SplittingScheme, StudyConfig, TimeGrid, Workbench,
};
use oracle::{add, expm_sym, matvec, max_diff, split_matrices, sum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn in_band(x: Option<f64>, lo: f64, hi: f64) -> bool {
    x.is_some_and(|v| (lo..=hi).contains(&v))
}

fn fmt_order(x: Option<f64>) -> String {
    x.map_or("none".into(), |v| format!("{v:.3}"))
}

fn order(r: &ConvergenceReport, s: SplittingScheme) -> Option<f64> {
    r.scheme(s).and_then(|s| s.order())
}

fn study(bench: &Workbench, problem: &str, norm: NormKind) -> Result<ConvergenceReport, Error> {
    let cfg = StudyConfig {
        problem: problem.into(),
        norm,
        ..StudyConfig::default()
    };
    bench.run(&cfg)
}

fn tail_orders(r: &ConvergenceReport) -> String {
    r.schemes
        .iter()
        .map(|s| {
            let last = s.local_orders.last().map_or("-".into(), |v| format!("{v:.2}"));
            format!("{}={last}", s.scheme.name())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn order_study(
    bench: &Workbench,
    problem: &str,
    norm: NormKind,
    lie_band: (f64, f64),
    strang_band: (f64, f64),
    reports: &mut Vec<(String, Result<ConvergenceReport, Error>)>,
    extra: impl Fn(&ConvergenceReport) -> (bool, String),
) -> Outcome {
    let start = Instant::now();
    let result = study(bench, problem, norm);
    let elapsed = start.elapsed().as_secs_f64();
    let out = match &result {
        Ok(r) => {
            let (lie, strang) = (order(r, SplittingScheme::Lie), order(r, SplittingScheme::Strang));
            let (extra_ok, extra_detail) = extra(r);
            let ok_lie = in_band(lie, lie_band.0, lie_band.1);
            let ok_strang = in_band(strang, strang_band.0, strang_band.1);
            outcome(
                ok_lie && ok_strang && extra_ok,
                format!(
                    "lie {} in [{}, {}]: {}; strang {} in [{}, {}]: {}; strangb {}{extra_detail}; finest local orders {}; {elapsed:.1}s",
                    fmt_order(lie),
                    lie_band.0,
                    lie_band.1,
                    ok_lie,
                    fmt_order(strang),
                    strang_band.0,
                    strang_band.1,
                    ok_strang,
                    fmt_order(order(r, SplittingScheme::StrangB)),
                    tail_orders(r),
                ),
            )
        }
        Err(e) => outcome(false, format!("study failed: {e}")),
    };
    reports.push((format!("{problem}/{norm}"), result));
    out
}

fn splitting_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a_fn = |x: f64, y: f64| 2.0 * x * y + 3.0;
    let b_fn = |x: f64, y: f64| 2.0 * x * y.powi(4) + 1.0;
    let coeff = CoefficientField::new(a_fn, b_fn);
    let mut worst = 0.0f64;
    let mut cases = 0;
    let mut failure = None;
    for nx in 1..=6 {
        for ny in 1..=6 {
            let grid = Grid::new(nx, ny).unwrap();
            let a = build_line_operator(&coeff, grid, Direction::X).unwrap();
            let b = build_line_operator(&coeff, grid, Direction::Y).unwrap();
            let (am, bm) = split_matrices(nx, ny, a_fn, b_fn);
            let n = nx * ny;
            for _ in 0..20 {
                let h: f64 = rng.gen_range(1e-3..0.5);
                let draw = |rng: &mut ChaCha8Rng| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
                let (u, g0, g1) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
                let (ea, eb) = (expm_sym(&am, h), expm_sym(&bm, h));
                let (ea2, eb2) = (expm_sym(&am, h / 2.0), expm_sym(&bm, h / 2.0));
                let lie = matvec(&ea, &matvec(&eb, &add(&u, &g0, h)));
                let strang = matvec(&ea2, &matvec(&eb2, &add(&matvec(&eb2, &matvec(&ea2, &u)), &g0, h)));
                let strang_b = add(&matvec(&ea2, &matvec(&eb, &matvec(&ea2, &add(&u, &g0, h / 2.0)))), &g1, h / 2.0);
                let gf = |v: &[f64]| GridFunction::new(grid, v.to_vec()).unwrap();
                let (uf, g0f, g1f) = (gf(&u), gf(&g0), gf(&g1));
                let got = [
                    lie_step(&a, &b, h, &uf, &g0f),
                    strang_step(&a, &b, h, &uf, &g0f),
                    strang_b_step(&a, &b, h, &uf, &g0f, &g1f),
                ];
                for (g, e) in got.into_iter().zip([lie, strang, strang_b]) {
                    match g {
                        Ok(g) => worst = worst.max(max_diff(g.values(), &e)),
                        Err(err) => failure = Some(format!("{nx}x{ny}: {err}")),
                    }
                    cases += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if let Some(f) = failure {
        return outcome(false, f);
    }
    outcome(
        worst <= 1e-10 && elapsed <= 10.0,
        format!("{cases} step comparisons on grids up to 6x6, max deviation {worst:.2e} (tol 1e-10), {elapsed:.2}s (limit 10s)"),
    )
}

fn commuting_spec(a: f64, b: f64) -> ProblemSpec {
    ProblemSpec {
        label: format!("constant:{a}:{b}"),
        coefficients: CoefficientField::new(move |_, _| a, move |_, _| b),
        initial: Arc::new(|x, y| (3.0 * x).sin() * y * (1.0 - y) * 4.0 + x * (1.0 - x) * (5.0 * y).cos()),
        forcing: vec![],
        formulation: Formulation::Standard,
        boundary_trace: None,
        lift: None,
        g_vanishes_on_boundary: true,
        discrete_lift_operator: false,
    }
}

fn exactness() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    let big_t = 0.25;
    for (a, b, nx, ny) in [(1.0, 1.0, 8, 8), (2.0, 0.5, 5, 7), (0.3, 3.0, 9, 4)] {
        let spec = commuting_spec(a, b);
        let grid = Grid::new(nx, ny).unwrap();
        let problem = match DiscreteProblem::new(&spec, grid) {
            Ok(p) => p,
            Err(e) => return outcome(false, e.to_string()),
        };
        let (am, bm) = split_matrices(nx, ny, |_, _| a, |_, _| b);
        let exact = matvec(&expm_sym(&sum(&am, &bm), big_t), problem.initial().values());
        for scheme in SplittingScheme::ALL {
            for steps in [1, 2, 7, 64, 500] {
                match integrate(scheme, &problem, TimeGrid::new(big_t, steps).unwrap()) {
                    Ok(u) => worst = worst.max(max_diff(u.values(), &exact)),
                    Err(e) => return outcome(false, e.to_string()),
                }
                cases += 1;
            }
        }
    }
    outcome(
        worst <= 1e-10,
        format!("{cases} runs with 1 to 500 steps, max deviation from exact flow {worst:.2e} (tol 1e-10)"),
    )
}

fn phi_recurrence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in [1, 2, 5, 16, 33, 64] {
        for _ in 0..3 {
            // R Rᵀ + shift is symmetric positive definite; negate it
            let r: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let shift = rng.gen_range(0.01..5.0);
            let scale = 10f64.powf(rng.gen_range(-1.0..3.0));
            let m = DenseMatrix::from_fn(n, n, |i, j| {
                let rr: f64 = (0..n).map(|k| r[i][k] * r[j][k]).sum();
                -scale * (rr / n as f64 + if i == j { shift } else { 0.0 })
            });
            let eig = match dense_sym_eigen(&m) {
                Ok(e) => e,
                Err(e) => return outcome(false, e.to_string()),
            };
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let t = rng.gen_range(0.01..2.0);
            let factorial = [1.0, 1.0, 2.0];
            for j in 0..3 {
                let (lhs, next) = match (phi_action(&eig, j, t, &v), phi_action(&eig, j + 1, t, &v)) {
                    (Ok(l), Ok(n)) => (l, n),
                    (Err(e), _) | (_, Err(e)) => return outcome(false, e.to_string()),
                };
                let mv = m.matvec(&next);
                let rhs: Vec<f64> = v.iter().zip(&mv).map(|(vi, mi)| vi / factorial[j] + t * mi).collect();
                let diff = lhs.iter().zip(&rhs).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                worst = worst.max(diff / vnorm);
                cases += 1;
            }
        }
    }
    outcome(
        worst <= 1e-11,
        format!("{cases} identities on matrices up to 64x64, max relative residual {worst:.2e} (tol 1e-11)"),
    )
}

fn smoothing() -> Outcome {
    let problem = match DiscreteProblem::new(&problem_by_label("example1").unwrap(), Grid::square(31).unwrap()) {
        Ok(p) => p,
        Err(e) => return outcome(false, e.to_string()),
    };
    let probe = |alpha: f64, scheme: SplittingScheme, h: f64| -> Result<f64, Error> {
        let est = smoothing_probe(problem.a(), problem.b(), problem.operator(), alpha, scheme, h, 64)?;
        Ok(est.iter().map(|(t, e)| t.powf(alpha) * e).fold(0.0, f64::max))
    };
    let mut ok = true;
    let mut details = Vec::new();
    for scheme in [SplittingScheme::Lie, SplittingScheme::Strang] {
        let (coarse, fine) = match (probe(0.5, scheme, 1.0 / 64.0), probe(0.5, scheme, 1.0 / 256.0)) {
            (Ok(c), Ok(f)) => (c, f),
            (Err(e), _) | (_, Err(e)) => return outcome(false, e.to_string()),
        };
        let variation = (coarse - fine).abs() / coarse.max(fine);
        ok &= variation <= 0.10;
        let contraction = [1.0 / 64.0, 1.0 / 256.0]
            .iter()
            .map(|&h| probe(0.0, scheme, h))
            .collect::<Result<Vec<_>, _>>();
        let largest = match contraction {
            Ok(v) => v.into_iter().fold(0.0, f64::max),
            Err(e) => return outcome(false, e.to_string()),
        };
        ok &= largest <= 1.0 + 1e-8;
        details.push(format!(
            "{} alpha=0.5 max {coarse:.4} vs {fine:.4} ({:.1}% <= 10%), alpha=0 max {largest:.10}",
            scheme.name(),
            100.0 * variation
        ));
    }
    outcome(ok, details.join("; "))
}

fn reference_integrity(reports: &[(String, Result<ConvergenceReport, Error>)]) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for (name, r) in reports {
        match r {
            Ok(r) => {
                let ratio = r.reference_gap / r.smallest_error();
                ok &= ratio < 0.1;
                details.push(format!("{name} gap/smallest {ratio:.1e}"));
            }
            Err(e) => {
                ok = false;
                details.push(format!("{name} failed: {e}"));
            }
        }
    }
    // the commuting problem splits exactly, so its errors sit at the
    // reference gap and the study has to abort
    let cfg = StudyConfig {
        problem: "manufactured:commuting".into(),
        grid: 7,
        kmin: 2,
        kmax: 4,
        ref_factor: 8,
        ..StudyConfig::default()
    };
    let aborted = matches!(Workbench::new().run(&cfg), Err(Error::ReferenceInconsistent { .. }));
    ok &= aborted;
    details.push(format!("inconsistent study aborted: {aborted}"));
    outcome(ok, details.join("; "))
}

fn main() -> ExitCode {
    let bench = Workbench::new();
    let mut reports = Vec::new();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!("criterion {n} {name}: {} {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };

    let c1 = order_study(&bench, "example1", NormKind::L2, (0.9, 1.1), (1.15, 1.40), &mut reports, |r| {
        let finest = |s| r.scheme(s).and_then(|s| s.finest_error());
        match (finest(SplittingScheme::StrangB), finest(SplittingScheme::Strang)) {
            (Some(b), Some(s)) => (b >= s, format!("; strangb finest error {b:.3e} >= strang {s:.3e}: {}", b >= s)),
            _ => (false, "; finest errors missing".into()),
        }
    });
    report(1, "order reduction in L2", c1);
    let none = |_: &ConvergenceReport| (true, String::new());
    let c2 = order_study(&bench, "example1", NormKind::Dual, (0.9, 1.1), (1.85, 2.15), &mut reports, none);
    report(2, "dual norm recovery", c2);
    let c3 = order_study(&bench, "example2", NormKind::L2, (0.9, 1.1), (1.9, 2.1), &mut reports, none);
    report(3, "full order", c3);
    let c4 = order_study(&bench, "example3", NormKind::L2, (0.15, 0.40), (0.15, 0.40), &mut reports, none);
    report(4, "boundary order reduction", c4);
    report(5, "splitting step oracle", splitting_oracle());
    report(6, "commuting exactness", exactness());
    report(7, "phi recurrence", phi_recurrence());
    report(8, "smoothing probe", smoothing());
    report(9, "reference integrity", reference_integrity(&reports));

    let failed: Vec<u32> = results.iter().filter(|(_, _, o)| !o.passed).map(|(n, _, _)| *n).collect();
    if failed.is_empty() {
        println!("acceptance: all 9 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of 9 criteria fail: {failed:?}", failed.len());
        ExitCode::FAILURE
    }
}
