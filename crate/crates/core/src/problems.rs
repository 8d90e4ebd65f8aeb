//! Test problems, the Dirichlet-lift homogenization and the
//! extrapolation-space treatment of boundary data.
//!
//! Inhomogeneities are sums of separable terms `c(t) · p(x, y)`. The time
//! factors carry exact derivatives, which the reference integrator needs, and
//! the separable form lets it work entirely in the eigenbasis of `L`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{
    apply_split_operator, assemble_full_operator, boundary_coupling_vector, build_line_operator,
    CoefficientField, Direction, Grid, GridFunction, LineOperatorFamily,
};
use crate::linalg::{cg_solve, DiscreteOperator, CG_DEFAULT_TOL};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Time factor of a separable term.
#[derive(Clone)]
pub enum TimeProfile {
    /// `p(t) e^{rate t}` with `p` given by ascending coefficients.
    PolyExp { poly: Vec<f64>, rate: f64 },
    /// An arbitrary function with whatever derivatives are known
    /// (`derivatives[k]` is the `(k+1)`-th derivative).
    Custom {
        value: ScalarFn,
        derivatives: Vec<ScalarFn>,
    },
}

impl TimeProfile {
    pub fn constant(c: f64) -> Self {
        Self::PolyExp {
            poly: vec![c],
            rate: 0.0,
        }
    }

    /// `c0 + c1 t`
    pub fn linear(c0: f64, c1: f64) -> Self {
        Self::PolyExp {
            poly: vec![c0, c1],
            rate: 0.0,
        }
    }

    /// `scale · e^{rate t}`
    pub fn exponential(scale: f64, rate: f64) -> Self {
        Self::PolyExp {
            poly: vec![scale],
            rate,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::PolyExp { poly, rate } => {
                let p = poly.iter().rev().fold(0.0, |acc, c| acc * t + c);
                if *rate == 0.0 {
                    p
                } else {
                    p * (rate * t).exp()
                }
            }
            Self::Custom { value, .. } => value(t),
        }
    }

    /// The `order`-th time derivative as a profile of its own.
    pub fn derivative(&self, order: usize) -> Result<TimeProfile> {
        match self {
            Self::PolyExp { poly, rate } => {
                let mut p = poly.clone();
                for _ in 0..order {
                    // (p e^{rt})' = (p' + r p) e^{rt}
                    let mut next: Vec<f64> = p.iter().map(|c| rate * c).collect();
                    for (k, c) in p.iter().enumerate().skip(1) {
                        next[k - 1] += k as f64 * c;
                    }
                    p = next;
                }
                Ok(Self::PolyExp { poly: p, rate: *rate })
            }
            Self::Custom { value, derivatives } => {
                if order == 0 {
                    return Ok(Self::Custom {
                        value: value.clone(),
                        derivatives: derivatives.clone(),
                    });
                }
                let value = derivatives
                    .get(order - 1)
                    .cloned()
                    .ok_or(Error::MissingDerivative { order })?;
                Ok(Self::Custom {
                    value,
                    derivatives: derivatives[order..].to_vec(),
                })
            }
        }
    }

    pub fn eval_derivative(&self, order: usize, t: f64) -> Result<f64> {
        if order == 0 {
            return Ok(self.eval(t));
        }
        match self {
            Self::Custom { derivatives, .. } => derivatives
                .get(order - 1)
                .map(|d| d(t))
                .ok_or(Error::MissingDerivative { order }),
            _ => Ok(self.derivative(order)?.eval(t)),
        }
    }

    fn scaled(&self, s: f64) -> Self {
        match self {
            Self::PolyExp { poly, rate } => Self::PolyExp {
                poly: poly.iter().map(|c| s * c).collect(),
                rate: *rate,
            },
            Self::Custom { value, derivatives } => {
                let value = value.clone();
                Self::Custom {
                    value: Arc::new(move |t| s * value(t)),
                    derivatives: derivatives
                        .iter()
                        .map(|d| {
                            let d = d.clone();
                            Arc::new(move |t| s * d(t)) as ScalarFn
                        })
                        .collect(),
                }
            }
        }
    }
}

impl fmt::Debug for TimeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PolyExp { poly, rate } => f
                .debug_struct("PolyExp")
                .field("poly", poly)
                .field("rate", rate)
                .finish(),
            Self::Custom { derivatives, .. } => f
                .debug_struct("Custom")
                .field("known_derivatives", &derivatives.len())
                .finish(),
        }
    }
}

/// Spatial factor of a separable term.
#[derive(Clone)]
pub enum SpatialProfile {
    /// A function sampled at the interior nodes.
    Field(SpaceFn),
    /// The boundary coupling vector of a Dirichlet trace.
    BoundaryCoupling(SpaceFn),
    /// The discrete operator applied to a function including its boundary
    /// values: `L_h F|interior + coupling(F|∂Ω)`.
    ExtendedOperator(SpaceFn),
}

impl SpatialProfile {
    pub fn field(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Field(Arc::new(f))
    }

    fn discretize(&self, a: &LineOperatorFamily, b: &LineOperatorFamily) -> Result<GridFunction> {
        let grid = a.grid();
        match self {
            Self::Field(f) => Ok(grid.sample(|x, y| f(x, y))),
            Self::BoundaryCoupling(f) => boundary_coupling_vector(a, b, |x, y| f(x, y)),
            Self::ExtendedOperator(f) => {
                let inner = grid.sample(|x, y| f(x, y));
                let mut out = apply_split_operator(a, &inner)?;
                out.axpy(1.0, &apply_split_operator(b, &inner)?)?;
                out.axpy(1.0, &boundary_coupling_vector(a, b, |x, y| f(x, y))?)?;
                Ok(out)
            }
        }
    }
}

impl fmt::Debug for SpatialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Field(_) => "Field",
            Self::BoundaryCoupling(_) => "BoundaryCoupling",
            Self::ExtendedOperator(_) => "ExtendedOperator",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ForcingTerm {
    pub time: TimeProfile,
    pub space: SpatialProfile,
}

impl ForcingTerm {
    pub fn new(time: TimeProfile, space: SpatialProfile) -> Self {
        Self { time, space }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// Homogeneous Dirichlet data, inhomogeneity given directly.
    Standard,
    /// Boundary data removed by subtracting a known lift.
    HomogenizedBc,
    /// Boundary data entering as the coupling vector `L·Gf`.
    ExtrapolationBc,
}

/// One separable piece `c(t) φ(x, y)` of a Dirichlet lift, optionally with
/// the analytic `𝓛φ`.
#[derive(Clone)]
pub struct LiftTerm {
    pub time: TimeProfile,
    pub space: SpaceFn,
    pub operator: Option<SpaceFn>,
}

impl fmt::Debug for LiftTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiftTerm")
            .field("time", &self.time)
            .field("analytic_operator", &self.operator.is_some())
            .finish()
    }
}

/// A smooth extension `F(t, x, y) = Σ c_k(t) φ_k(x, y)` of boundary data.
#[derive(Debug, Clone, Default)]
pub struct Lift {
    pub terms: Vec<LiftTerm>,
}

impl Lift {
    pub fn eval(&self, t: f64, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|k| k.time.eval(t) * (k.space)(x, y)).sum()
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub label: String,
    pub coefficients: CoefficientField,
    pub initial: SpaceFn,
    pub forcing: Vec<ForcingTerm>,
    pub formulation: Formulation,
    /// Dirichlet trace of the original problem, when it is not homogeneous.
    pub boundary_trace: Option<SpaceFn>,
    /// Lift added back by [`ProblemSpec::recover`].
    pub lift: Option<Lift>,
    pub g_vanishes_on_boundary: bool,
    /// Set when `𝓛F` of a lift was not known analytically and had to be
    /// discretized, which costs accuracy.
    pub discrete_lift_operator: bool,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("label", &self.label)
            .field("forcing", &self.forcing)
            .field("formulation", &self.formulation)
            .field("g_vanishes_on_boundary", &self.g_vanishes_on_boundary)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// Pointwise value of the `order`-th time derivative of the field-type
    /// forcing terms. Boundary couplings have no pointwise meaning and are
    /// skipped.
    pub fn forcing_value(&self, order: usize, t: f64, x: f64, y: f64) -> Result<f64> {
        let mut acc = 0.0;
        for term in &self.forcing {
            if let SpatialProfile::Field(f) = &term.space {
                acc += term.time.eval_derivative(order, t)? * f(x, y);
            }
        }
        Ok(acc)
    }

    /// Largest `|g(t)|` over `samples` points per edge of ∂Ω.
    pub fn boundary_forcing_max(&self, t: f64, samples: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for k in 0..=samples {
            let s = k as f64 / samples as f64;
            for (x, y) in [(s, 0.0), (s, 1.0), (0.0, s), (1.0, s)] {
                worst = worst.max(self.forcing_value(0, t, x, y)?.abs());
            }
        }
        Ok(worst)
    }

    /// Adds the lift back: `u ↦ u + F(t)`.
    pub fn recover(&self, u: &GridFunction, t: f64) -> GridFunction {
        match &self.lift {
            None => u.clone(),
            Some(lift) => {
                let f = u.grid().sample(|x, y| lift.eval(t, x, y));
                let mut out = u.clone();
                out.axpy(1.0, &f).expect("same grid");
                out
            }
        }
    }
}

/// The smooth bump `e^{8 - 1/(x(1-x)) - 1/(y(1-y))}`, zero on ∂Ω.
pub fn bump(x: f64, y: f64) -> f64 {
    let px = x * (1.0 - x);
    let py = y * (1.0 - y);
    if px <= 0.0 || py <= 0.0 {
        return 0.0;
    }
    (8.0 - 1.0 / px - 1.0 / py).exp()
}

fn example_coefficients() -> CoefficientField {
    CoefficientField::new(|x, y| 2.0 * x * y + 3.0, |x, y| 2.0 * x * y.powi(4) + 1.0)
}

fn vanishing_polynomial(x: f64, y: f64) -> f64 {
    x * (1.0 - x) * y * (1.0 - y)
}

/// `ψ = x(1-x)y(1-y) + t e^{x³y}`; nonzero on ∂Ω for `t > 0`.
pub fn example_order_reduction() -> ProblemSpec {
    ProblemSpec {
        label: "example1".into(),
        coefficients: example_coefficients(),
        initial: Arc::new(bump),
        forcing: vec![
            ForcingTerm::new(TimeProfile::constant(1.0), SpatialProfile::field(vanishing_polynomial)),
            ForcingTerm::new(
                TimeProfile::linear(0.0, 1.0),
                SpatialProfile::field(|x, y| (x.powi(3) * y).exp()),
            ),
        ],
        formulation: Formulation::Standard,
        boundary_trace: None,
        lift: None,
        g_vanishes_on_boundary: false,
        discrete_lift_operator: false,
    }
}

/// `ψ = x(1-x)y(1-y) e^t`; vanishes on ∂Ω for all `t`.
pub fn example_full_order() -> ProblemSpec {
    ProblemSpec {
        label: "example2".into(),
        coefficients: example_coefficients(),
        initial: Arc::new(bump),
        forcing: vec![ForcingTerm::new(
            TimeProfile::exponential(1.0, 1.0),
            SpatialProfile::field(vanishing_polynomial),
        )],
        formulation: Formulation::Standard,
        boundary_trace: None,
        lift: None,
        g_vanishes_on_boundary: true,
        discrete_lift_operator: false,
    }
}

/// Boundary value 1 on all of ∂Ω with the bump as initial value, posed as
/// `y' = L y + c` where `c` is the stencil coupling of the boundary data.
pub fn example_inhomogeneous_bc() -> ProblemSpec {
    let one: SpaceFn = Arc::new(|_, _| 1.0);
    ProblemSpec {
        label: "example3".into(),
        coefficients: example_coefficients(),
        initial: Arc::new(bump),
        forcing: vec![ForcingTerm::new(
            TimeProfile::constant(1.0),
            SpatialProfile::BoundaryCoupling(one.clone()),
        )],
        formulation: Formulation::ExtrapolationBc,
        boundary_trace: Some(one),
        lift: None,
        g_vanishes_on_boundary: false,
        discrete_lift_operator: false,
    }
}

/// Rewrites a problem with boundary data `F|∂Ω` for `U = w - F`:
/// `ψ_new = ψ + 𝓛F - ∂ₜF`, `U₀ = w₀ - F(0)`, homogeneous Dirichlet data.
pub fn homogenize(problem: &ProblemSpec, lift: Lift) -> Result<ProblemSpec> {
    let mut forcing = problem.forcing.clone();
    let mut discrete_lift_operator = problem.discrete_lift_operator;
    for term in &lift.terms {
        let dt = term.time.derivative(1).map_err(|_| Error::MissingLiftDerivative)?;
        let space_op = match &term.operator {
            Some(op) => SpatialProfile::Field(op.clone()),
            None => {
                discrete_lift_operator = true;
                SpatialProfile::ExtendedOperator(term.space.clone())
            }
        };
        forcing.push(ForcingTerm::new(term.time.clone(), space_op));
        forcing.push(ForcingTerm::new(
            dt.scaled(-1.0),
            SpatialProfile::Field(term.space.clone()),
        ));
    }
    let w0 = problem.initial.clone();
    let lift_at_zero = lift.clone();
    let initial: SpaceFn = Arc::new(move |x, y| w0(x, y) - lift_at_zero.eval(0.0, x, y));
    Ok(ProblemSpec {
        label: problem.label.clone(),
        coefficients: problem.coefficients.clone(),
        initial,
        forcing,
        formulation: Formulation::HomogenizedBc,
        boundary_trace: None,
        lift: Some(lift),
        g_vanishes_on_boundary: false,
        discrete_lift_operator,
    })
}

/// Discrete harmonic extension: solves `L_h v = -coupling(f)`.
pub fn dirichlet_lift(
    a: &LineOperatorFamily,
    b: &LineOperatorFamily,
    l: &DiscreteOperator,
    trace: impl Fn(f64, f64) -> f64,
) -> Result<GridFunction> {
    let coupling = boundary_coupling_vector(a, b, trace)?;
    let rhs: Vec<f64> = coupling.values().iter().map(|v| -v).collect();
    let v = cg_solve(l, &rhs, CG_DEFAULT_TOL)?;
    GridFunction::new(a.grid(), v)
}

fn manufactured(name: &str) -> Result<ProblemSpec> {
    let label = format!("manufactured:{name}");
    match name {
        // a = b ≡ 1 with the stationary harmonic lift x² - y²; the
        // homogenized solution is identically zero
        "harmonic" => {
            let harmonic: SpaceFn = Arc::new(|x, y| x * x - y * y);
            let raw = ProblemSpec {
                label,
                coefficients: CoefficientField::constant(1.0),
                initial: harmonic.clone(),
                forcing: vec![],
                formulation: Formulation::Standard,
                boundary_trace: Some(harmonic.clone()),
                lift: None,
                g_vanishes_on_boundary: true,
                discrete_lift_operator: false,
            };
            homogenize(
                &raw,
                Lift {
                    terms: vec![LiftTerm {
                        time: TimeProfile::constant(1.0),
                        space: harmonic,
                        operator: Some(Arc::new(|_, _| 0.0)),
                    }],
                },
            )
        }
        // boundary value t everywhere: ψ = -1, U₀ = w₀
        "time-lift" => {
            let raw = ProblemSpec {
                label,
                coefficients: example_coefficients(),
                initial: Arc::new(bump),
                forcing: vec![],
                formulation: Formulation::Standard,
                boundary_trace: Some(Arc::new(|_, _| 0.0)),
                lift: None,
                g_vanishes_on_boundary: true,
                discrete_lift_operator: false,
            };
            homogenize(
                &raw,
                Lift {
                    terms: vec![LiftTerm {
                        time: TimeProfile::linear(0.0, 1.0),
                        space: Arc::new(|_, _| 1.0),
                        operator: Some(Arc::new(|_, _| 0.0)),
                    }],
                },
            )
        }
        // constant coefficients, no forcing: A and B commute
        "commuting" => Ok(ProblemSpec {
            label,
            coefficients: CoefficientField::constant(1.0),
            initial: Arc::new(|x, y| {
                (std::f64::consts::PI * x).sin() * (2.0 * std::f64::consts::PI * y).sin() + bump(x, y)
            }),
            forcing: vec![],
            formulation: Formulation::Standard,
            boundary_trace: None,
            lift: None,
            g_vanishes_on_boundary: true,
            discrete_lift_operator: false,
        }),
        _ => Err(Error::UnknownProblem(label)),
    }
}

/// Looks a problem up by its CLI label.
pub fn problem_by_label(label: &str) -> Result<ProblemSpec> {
    match label {
        "example1" => Ok(example_order_reduction()),
        "example2" => Ok(example_full_order()),
        "example3" => Ok(example_inhomogeneous_bc()),
        _ => match label.strip_prefix("manufactured:") {
            Some(name) => manufactured(name),
            None => Err(Error::UnknownProblem(label.to_string())),
        },
    }
}

pub const PROBLEM_LABELS: &[&str] = &[
    "example1",
    "example2",
    "example3",
    "manufactured:harmonic",
    "manufactured:time-lift",
    "manufactured:commuting",
];

/// A problem discretized on one grid: split operators, the assembled `L`,
/// the initial value and the spatial factors of the inhomogeneity.
#[derive(Debug)]
pub struct DiscreteProblem {
    spec: ProblemSpec,
    grid: Grid,
    a: LineOperatorFamily,
    b: LineOperatorFamily,
    l: Arc<DiscreteOperator>,
    u0: GridFunction,
    forcing: Vec<(TimeProfile, GridFunction)>,
}

impl DiscreteProblem {
    pub fn new(spec: &ProblemSpec, grid: Grid) -> Result<Self> {
        let a = build_line_operator(&spec.coefficients, grid, Direction::X)?;
        let b = build_line_operator(&spec.coefficients, grid, Direction::Y)?;
        let l = Arc::new(assemble_full_operator(&a, &b)?);
        Self::assemble(spec, a, b, l)
    }

    /// Discretizes `spec` reusing an assembled operator (and its cached
    /// decomposition). `l` must be `A + B` for the problem's coefficients on
    /// `grid`; this is checked entry by entry.
    pub fn with_shared_operator(spec: &ProblemSpec, grid: Grid, l: Arc<DiscreteOperator>) -> Result<Self> {
        let a = build_line_operator(&spec.coefficients, grid, Direction::X)?;
        let b = build_line_operator(&spec.coefficients, grid, Direction::Y)?;
        if l.dim() != grid.len() {
            return Err(Error::GridMismatch);
        }
        let fresh = assemble_full_operator(&a, &b)?;
        if fresh.dense() != l.dense() {
            return Err(Error::InvalidConfig(
                "shared operator does not match the problem's coefficients".into(),
            ));
        }
        Self::assemble(spec, a, b, l)
    }

    fn assemble(
        spec: &ProblemSpec,
        a: LineOperatorFamily,
        b: LineOperatorFamily,
        l: Arc<DiscreteOperator>,
    ) -> Result<Self> {
        let grid = a.grid();
        let initial = spec.initial.clone();
        let u0 = GridFunction::new(grid, grid.sample(|x, y| initial(x, y)).into_values())?;
        let forcing = spec
            .forcing
            .iter()
            .map(|term| Ok((term.time.clone(), term.space.discretize(&a, &b)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec: spec.clone(),
            grid,
            a,
            b,
            l,
            u0,
            forcing,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn a(&self) -> &LineOperatorFamily {
        &self.a
    }

    pub fn b(&self) -> &LineOperatorFamily {
        &self.b
    }

    pub fn operator(&self) -> &DiscreteOperator {
        &self.l
    }

    pub fn shared_operator(&self) -> Arc<DiscreteOperator> {
        self.l.clone()
    }

    pub fn initial(&self) -> &GridFunction {
        &self.u0
    }

    pub fn forcing_terms(&self) -> &[(TimeProfile, GridFunction)] {
        &self.forcing
    }

    pub fn has_forcing(&self) -> bool {
        !self.forcing.is_empty()
    }

    /// `out += alpha · g^{(order)}(t)`
    pub fn add_forcing(&self, order: usize, t: f64, alpha: f64, out: &mut GridFunction) -> Result<()> {
        for (profile, space) in &self.forcing {
            let c = profile.eval_derivative(order, t)?;
            if c != 0.0 {
                out.axpy(alpha * c, space)?;
            }
        }
        Ok(())
    }

    /// `g^{(order)}(t)` on the grid.
    pub fn forcing(&self, order: usize, t: f64) -> Result<GridFunction> {
        let mut out = GridFunction::zeros(self.grid);
        self.add_forcing(order, t, 1.0, &mut out)?;
        Ok(out)
    }
}
