//! Exponential dimension-splitting integrators and the unsplit exponential
//! reference integrator.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, LineOperatorFamily, LinePropagator};
use crate::linalg::{phi, DiscreteOperator};
use crate::problems::DiscreteProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplittingScheme {
    Lie,
    Strang,
    StrangB,
}

impl SplittingScheme {
    pub const ALL: [SplittingScheme; 3] = [Self::Lie, Self::Strang, Self::StrangB];

    pub fn name(self) -> &'static str {
        match self {
            Self::Lie => "lie",
            Self::Strang => "strang",
            Self::StrangB => "strangb",
        }
    }
}

impl fmt::Display for SplittingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplittingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lie" => Ok(Self::Lie),
            "strang" => Ok(Self::Strang),
            "strangb" | "strang-b" | "strang_b" => Ok(Self::StrangB),
            other => Err(Error::InvalidConfig(format!("unknown scheme '{other}'"))),
        }
    }
}

/// `steps` uniform steps on `[0, final_time]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    final_time: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(final_time: f64, steps: usize) -> Result<Self> {
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidConfig("at least one time step is required".into()));
        }
        Ok(Self { final_time, steps })
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step_size(&self) -> f64 {
        self.final_time / self.steps as f64
    }

    /// `t_n`, exact at `n = steps`.
    pub fn time(&self, n: usize) -> f64 {
        self.final_time * n as f64 / self.steps as f64
    }
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("step size must be positive, got {h}")))
    }
}

/// `e^{hA} e^{hB} (u + h g(t_n))`
pub fn lie_step(
    a: &LineOperatorFamily,
    b: &LineOperatorFamily,
    h: f64,
    u: &GridFunction,
    g_n: &GridFunction,
) -> Result<GridFunction> {
    check_step(h)?;
    let mut v = u.clone();
    v.axpy(h, g_n)?;
    a.exp_apply(h, &b.exp_apply(h, &v)?)
}

/// `e^{h/2 A} e^{h/2 B} (e^{h/2 B} e^{h/2 A} u + h g(t_n + h/2))`
pub fn strang_step(
    a: &LineOperatorFamily,
    b: &LineOperatorFamily,
    h: f64,
    u: &GridFunction,
    g_mid: &GridFunction,
) -> Result<GridFunction> {
    check_step(h)?;
    let mut v = b.exp_apply(h / 2.0, &a.exp_apply(h / 2.0, u)?)?;
    v.axpy(h, g_mid)?;
    a.exp_apply(h / 2.0, &b.exp_apply(h / 2.0, &v)?)
}

/// `e^{h/2 A} e^{hB} e^{h/2 A} u`
pub fn strang_step_homogeneous(
    a: &LineOperatorFamily,
    b: &LineOperatorFamily,
    h: f64,
    u: &GridFunction,
) -> Result<GridFunction> {
    check_step(h)?;
    a.exp_apply(h / 2.0, &b.exp_apply(h, &a.exp_apply(h / 2.0, u)?)?)
}

/// `e^{h/2 A} e^{hB} e^{h/2 A} (u + h/2 g(t_n)) + h/2 g(t_{n+1})`
pub fn strang_b_step(
    a: &LineOperatorFamily,
    b: &LineOperatorFamily,
    h: f64,
    u: &GridFunction,
    g_n: &GridFunction,
    g_next: &GridFunction,
) -> Result<GridFunction> {
    check_step(h)?;
    let mut v = u.clone();
    v.axpy(h / 2.0, g_n)?;
    let mut out = strang_step_homogeneous(a, b, h, &v)?;
    out.axpy(h / 2.0, g_next)?;
    Ok(out)
}

/// The propagators one scheme needs for one step size, built once and
/// reused for every step.
#[derive(Debug, Clone)]
pub struct SplittingStepper {
    scheme: SplittingScheme,
    h: f64,
    a_first: LinePropagator,
    b_first: LinePropagator,
    /// Strang with forcing needs `e^{h/2 B}`; Strang B and the homogeneous
    /// Strang step need `e^{hB}` and only one `A` propagator.
    b_second: Option<LinePropagator>,
}

impl SplittingStepper {
    pub fn new(
        scheme: SplittingScheme,
        a: &LineOperatorFamily,
        b: &LineOperatorFamily,
        h: f64,
    ) -> Result<Self> {
        check_step(h)?;
        if a.grid() != b.grid() {
            return Err(Error::GridMismatch);
        }
        let (a_first, b_first, b_second) = match scheme {
            SplittingScheme::Lie => (a.propagator(h)?, b.propagator(h)?, None),
            SplittingScheme::Strang => (
                a.propagator(h / 2.0)?,
                b.propagator(h / 2.0)?,
                Some(b.propagator(h)?),
            ),
            SplittingScheme::StrangB => (a.propagator(h / 2.0)?, b.propagator(h)?, None),
        };
        Ok(Self {
            scheme,
            h,
            a_first,
            b_first,
            b_second,
        })
    }

    pub fn scheme(&self) -> SplittingScheme {
        self.scheme
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// Advances `u` from `t_n` to `t_n + h`. `buf` is scratch of the same length.
    fn step_in_place(
        &self,
        problem: &DiscreteProblem,
        t_n: f64,
        t_next: f64,
        u: &mut GridFunction,
        buf: &mut GridFunction,
    ) -> Result<()> {
        let h = self.h;
        let forced = problem.has_forcing();
        match self.scheme {
            SplittingScheme::Lie => {
                if forced {
                    problem.add_forcing(0, t_n, h, u)?;
                }
                self.b_first.apply_slice(u.values(), buf.values_mut());
                self.a_first.apply_slice(buf.values(), u.values_mut());
            }
            SplittingScheme::Strang if forced => {
                self.a_first.apply_slice(u.values(), buf.values_mut());
                self.b_first.apply_slice(buf.values(), u.values_mut());
                problem.add_forcing(0, t_n + h / 2.0, h, u)?;
                self.b_first.apply_slice(u.values(), buf.values_mut());
                self.a_first.apply_slice(buf.values(), u.values_mut());
            }
            SplittingScheme::Strang => {
                let b_full = self.b_second.as_ref().expect("built for Strang");
                self.a_first.apply_slice(u.values(), buf.values_mut());
                b_full.apply_slice(buf.values(), u.values_mut());
                self.a_first.apply_slice(u.values(), buf.values_mut());
                std::mem::swap(u, buf);
            }
            SplittingScheme::StrangB => {
                if forced {
                    problem.add_forcing(0, t_n, h / 2.0, u)?;
                }
                self.a_first.apply_slice(u.values(), buf.values_mut());
                self.b_first.apply_slice(buf.values(), u.values_mut());
                self.a_first.apply_slice(u.values(), buf.values_mut());
                std::mem::swap(u, buf);
                if forced {
                    problem.add_forcing(0, t_next, h / 2.0, u)?;
                }
            }
        }
        Ok(())
    }

    /// Integrates from the problem's initial value over `time`, whose step
    /// size must match the stepper's.
    pub fn run(&self, problem: &DiscreteProblem, time: TimeGrid) -> Result<GridFunction> {
        if (time.step_size() - self.h).abs() > 1e-14 * self.h {
            return Err(Error::InvalidConfig(format!(
                "stepper built for h = {}, time grid has h = {}",
                self.h,
                time.step_size()
            )));
        }
        if problem.grid() != self.a_first.grid() {
            return Err(Error::GridMismatch);
        }
        let mut u = problem.initial().clone();
        let mut buf = GridFunction::zeros(problem.grid());
        for n in 0..time.steps() {
            self.step_in_place(problem, time.time(n), time.time(n + 1), &mut u, &mut buf)?;
        }
        if !u.is_finite() {
            return Err(Error::NonFinite("splitting solution"));
        }
        Ok(u)
    }
}

/// Runs `scheme` on `problem` over `time`.
pub fn integrate(
    scheme: SplittingScheme,
    problem: &DiscreteProblem,
    time: TimeGrid,
) -> Result<GridFunction> {
    SplittingStepper::new(scheme, problem.a(), problem.b(), time.step_size())?.run(problem, time)
}

/// Exponential quadrature on the unsplit operator,
/// `u_{n+1} = e^{hL} u_n + h φ₁(hL) g(t_n) + h² φ₂(hL) g'(t_n) + h³ φ₃(hL) g''(t_n)`,
/// carried out in the eigenbasis of `L`. Exact for inhomogeneities that are
/// quadratic in time.
pub fn reference_solve(
    l: &DiscreteOperator,
    problem: &DiscreteProblem,
    time: TimeGrid,
) -> Result<GridFunction> {
    let grid = problem.grid();
    if l.dim() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: l.dim(),
        });
    }
    let eig = l.decompose()?;
    let h = time.step_size();
    let lambdas = eig.eigenvalues();
    let mut factors: [Vec<f64>; 4] = Default::default();
    for (j, f) in factors.iter_mut().enumerate() {
        let scale = h.powi(j as i32);
        *f = lambdas
            .iter()
            .map(|&lam| phi(j, h * lam).map(|v| scale * v))
            .collect::<Result<Vec<_>>>()?;
    }
    let terms = problem.forcing_terms();
    let projected: Vec<Vec<f64>> = terms
        .iter()
        .map(|(_, space)| eig.to_eigenbasis(space.values()))
        .collect();
    // fail before the time loop if a derivative is unavailable
    for (profile, _) in terms {
        profile.eval_derivative(2, 0.0)?;
    }
    let mut c = eig.to_eigenbasis(problem.initial().values());
    for n in 0..time.steps() {
        let t = time.time(n);
        for (ci, e) in c.iter_mut().zip(&factors[0]) {
            *ci *= e;
        }
        for ((profile, _), p) in terms.iter().zip(&projected) {
            let d = [
                profile.eval_derivative(0, t)?,
                profile.eval_derivative(1, t)?,
                profile.eval_derivative(2, t)?,
            ];
            for (i, ci) in c.iter_mut().enumerate() {
                *ci += p[i]
                    * (d[0] * factors[1][i] + d[1] * factors[2][i] + d[2] * factors[3][i]);
            }
        }
    }
    let u = GridFunction::new(grid, eig.from_eigenbasis(&c))
        .map_err(|_| Error::NonFinite("reference solution"))?;
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_line_operator, CoefficientField, Direction, Grid};
    use crate::problems::{example_full_order, example_order_reduction, problem_by_label};

    fn families(n: usize) -> (LineOperatorFamily, LineOperatorFamily) {
        let c = CoefficientField::new(|x, y| 2.0 * x * y + 3.0, |x, y| 2.0 * x * y.powi(4) + 1.0);
        let g = Grid::square(n).unwrap();
        (
            build_line_operator(&c, g, Direction::X).unwrap(),
            build_line_operator(&c, g, Direction::Y).unwrap(),
        )
    }

    fn dist(a: &GridFunction, b: &GridFunction) -> f64 {
        a.sub(b).unwrap().max_abs()
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in SplittingScheme::ALL {
            assert_eq!(s.name().parse::<SplittingScheme>().unwrap(), s);
        }
        assert!("euler".parse::<SplittingScheme>().is_err());
    }

    #[test]
    fn time_grid() {
        let t = TimeGrid::new(1.0, 8).unwrap();
        assert_eq!(t.step_size(), 0.125);
        assert_eq!(t.time(8), 1.0);
        assert!(TimeGrid::new(0.0, 8).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn fused_strang_matches_unfused_without_forcing() {
        let (a, b) = families(9);
        let u = a.grid().sample(|x, y| (x * 3.0).sin() * y * (1.0 - y));
        let zero = GridFunction::zeros(a.grid());
        let fused = strang_step_homogeneous(&a, &b, 0.01, &u).unwrap();
        let plain = strang_step(&a, &b, 0.01, &u, &zero).unwrap();
        assert!(dist(&fused, &plain) <= 1e-14 * u.max_abs());
    }

    #[test]
    fn steps_reject_bad_input() {
        let (a, b) = families(4);
        let u = GridFunction::zeros(a.grid());
        assert!(lie_step(&a, &b, 0.0, &u, &u).is_err());
        assert!(strang_step(&a, &b, -1.0, &u, &u).is_err());
        let other = GridFunction::zeros(Grid::square(5).unwrap());
        assert!(strang_b_step(&a, &b, 0.1, &other, &other, &other).is_err());
    }

    #[test]
    fn stepper_matches_single_step_functions() {
        let grid = Grid::square(7).unwrap();
        let problem = DiscreteProblem::new(&example_order_reduction(), grid).unwrap();
        let h = 0.05;
        let time = TimeGrid::new(h, 1).unwrap();
        let (a, b) = (problem.a(), problem.b());
        let u0 = problem.initial();
        let g0 = problem.forcing(0, 0.0).unwrap();
        let g_mid = problem.forcing(0, h / 2.0).unwrap();
        let g1 = problem.forcing(0, h).unwrap();
        let cases = [
            (SplittingScheme::Lie, lie_step(a, b, h, u0, &g0).unwrap()),
            (SplittingScheme::Strang, strang_step(a, b, h, u0, &g_mid).unwrap()),
            (SplittingScheme::StrangB, strang_b_step(a, b, h, u0, &g0, &g1).unwrap()),
        ];
        for (scheme, expected) in cases {
            let got = integrate(scheme, &problem, time).unwrap();
            assert!(dist(&got, &expected) <= 1e-13 * expected.max_abs(), "{scheme}");
        }
    }

    #[test]
    fn commuting_operators_split_exactly() {
        let grid = Grid::square(8).unwrap();
        let problem = DiscreteProblem::new(&problem_by_label("manufactured:commuting").unwrap(), grid)
            .unwrap();
        let time = TimeGrid::new(0.1, 4).unwrap();
        let exact = reference_solve(problem.operator(), &problem, time).unwrap();
        for scheme in SplittingScheme::ALL {
            let got = integrate(scheme, &problem, time).unwrap();
            assert!(dist(&got, &exact) <= 1e-12 * exact.max_abs().max(1e-3), "{scheme}");
        }
    }

    #[test]
    fn reference_is_exact_for_linear_in_time_forcing() {
        let grid = Grid::square(6).unwrap();
        let problem = DiscreteProblem::new(&example_order_reduction(), grid).unwrap();
        let coarse = reference_solve(problem.operator(), &problem, TimeGrid::new(0.5, 2).unwrap())
            .unwrap();
        let fine = reference_solve(problem.operator(), &problem, TimeGrid::new(0.5, 64).unwrap())
            .unwrap();
        assert!(dist(&coarse, &fine) <= 1e-12 * fine.max_abs());
    }

    #[test]
    fn reference_converges_for_exponential_forcing() {
        let grid = Grid::square(6).unwrap();
        let problem = DiscreteProblem::new(&example_full_order(), grid).unwrap();
        let l = problem.operator();
        let r = |n| reference_solve(l, &problem, TimeGrid::new(1.0, n).unwrap()).unwrap();
        let (e1, e2) = (dist(&r(8), &r(256)), dist(&r(16), &r(256)));
        assert!(e1 / e2 > 6.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn lie_converges_to_reference() {
        let grid = Grid::square(7).unwrap();
        let problem = DiscreteProblem::new(&example_full_order(), grid).unwrap();
        let exact =
            reference_solve(problem.operator(), &problem, TimeGrid::new(0.5, 512).unwrap()).unwrap();
        let err = |n| {
            let u = integrate(SplittingScheme::Lie, &problem, TimeGrid::new(0.5, n).unwrap()).unwrap();
            dist(&u, &exact)
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e2 < e1 && e1 / e2 > 1.5, "{e1} {e2}");
    }
}
