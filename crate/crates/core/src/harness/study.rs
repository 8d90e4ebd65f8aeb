use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use super::fit::{fit_order, local_orders, OrderFit};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::integrators::{integrate, reference_solve, SplittingScheme, TimeGrid};
use crate::linalg::{DiscreteOperator, DEFAULT_DIMENSION_CAP};
use crate::norms::{measure, NormKind};
use crate::problems::{problem_by_label, DiscreteProblem, ProblemSpec};

/// Points with error below this multiple of the reference gap are not fitted.
pub const FLOOR_FACTOR: f64 = 100.0;
/// A study aborts when the reference gap exceeds this fraction of the
/// smallest measured error.
pub const GAP_TOLERANCE: f64 = 0.1;

fn default_problem() -> String {
    "example1".into()
}

fn default_schemes() -> Vec<SplittingScheme> {
    SplittingScheme::ALL.to_vec()
}

fn default_norm() -> NormKind {
    NormKind::L2
}

fn default_grid() -> usize {
    63
}

fn default_final_time() -> f64 {
    1.0
}

fn default_kmin() -> u32 {
    3
}

fn default_kmax() -> u32 {
    10
}

fn default_ref_factor() -> usize {
    32
}

/// Accepts either `["lie", "strang"]` or `"lie,strang"`.
fn schemes_from_json<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<SplittingScheme>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        List(Vec<String>),
        Joined(String),
    }
    let names = match Raw::deserialize(d)? {
        Raw::List(v) => v,
        Raw::Joined(s) => s.split(',').map(str::to_string).collect(),
    };
    names
        .iter()
        .map(|s| s.parse().map_err(serde::de::Error::custom))
        .collect()
}

/// A convergence study. Serialized keys mirror the command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_problem")]
    pub problem: String,
    #[serde(default = "default_schemes", deserialize_with = "schemes_from_json")]
    pub schemes: Vec<SplittingScheme>,
    #[serde(default = "default_norm")]
    pub norm: NormKind,
    /// Interior nodes per direction.
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(rename = "T", default = "default_final_time")]
    pub final_time: f64,
    #[serde(default = "default_kmin")]
    pub kmin: u32,
    #[serde(default = "default_kmax")]
    pub kmax: u32,
    #[serde(default = "default_ref_factor", alias = "ref_factor")]
    pub ref_factor: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub plot: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Slopes of the dashed guide lines in the plot; empty picks a default
    /// for the problem and norm.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub guides: Vec<f64>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            problem: default_problem(),
            schemes: default_schemes(),
            norm: default_norm(),
            grid: default_grid(),
            final_time: default_final_time(),
            kmin: default_kmin(),
            kmax: default_kmax(),
            ref_factor: default_ref_factor(),
            out: None,
            plot: false,
            threads: None,
            guides: Vec::new(),
        }
    }
}

impl StudyConfig {
    /// The smaller profile used in tests: 31×31 grid, `k = 3..8`.
    pub fn ci_profile(problem: &str, norm: NormKind) -> Self {
        Self {
            problem: problem.into(),
            norm,
            grid: 31,
            kmax: 8,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.schemes.is_empty() {
            return bad("at least one scheme is required".into());
        }
        if self.grid == 0 {
            return bad("grid must have at least one interior node".into());
        }
        if self.grid * self.grid > DEFAULT_DIMENSION_CAP {
            return Err(Error::DimensionCapExceeded {
                dim: self.grid * self.grid,
                cap: DEFAULT_DIMENSION_CAP,
            });
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return bad(format!("T must be positive, got {}", self.final_time));
        }
        if self.kmin > self.kmax {
            return bad(format!("kmin {} exceeds kmax {}", self.kmin, self.kmax));
        }
        if self.kmax > 20 {
            return bad(format!("kmax {} is too large", self.kmax));
        }
        if self.ref_factor < 8 {
            return bad(format!("reference factor must be at least 8, got {}", self.ref_factor));
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        if let NormKind::Fractional(g) = self.norm {
            NormKind::fractional(g)?;
        }
        Ok(())
    }

    /// `(2^k, T/2^k)` for `k = kmin..=kmax`, coarsest first.
    pub fn step_counts(&self) -> Vec<(usize, f64)> {
        (self.kmin..=self.kmax)
            .map(|k| {
                let steps = 1usize << k;
                (steps, self.final_time / steps as f64)
            })
            .collect()
    }

    /// Steps of the reference run, `ref_factor` times finer than the finest
    /// study step.
    pub fn reference_steps(&self) -> usize {
        (1usize << self.kmax) * self.ref_factor
    }

    pub fn guide_slopes(&self) -> Vec<f64> {
        if !self.guides.is_empty() {
            return self.guides.clone();
        }
        match (self.problem.as_str(), self.norm) {
            ("example1", NormKind::L2) => vec![1.0, 1.25],
            ("example3", _) => vec![0.25],
            _ => vec![1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub h: f64,
    pub steps: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeResult {
    pub scheme: SplittingScheme,
    pub measurements: Vec<Measurement>,
    /// `None` when fewer than three points survive floor filtering.
    pub fit: Option<OrderFit>,
    pub local_orders: Vec<f64>,
}

impl SchemeResult {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.measurements.iter().map(|m| (m.h, m.error)).collect()
    }

    pub fn order(&self) -> Option<f64> {
        self.fit.map(|f| f.order)
    }

    /// Error at the smallest step size.
    pub fn finest_error(&self) -> Option<f64> {
        self.measurements
            .iter()
            .min_by(|a, b| a.h.total_cmp(&b.h))
            .map(|m| m.error)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub problem: String,
    pub norm: NormKind,
    pub grid: Grid,
    #[serde(rename = "T")]
    pub final_time: f64,
    pub reference_steps: usize,
    /// Distance between reference runs with `reference_steps` and twice as
    /// many steps, in the study norm.
    pub reference_gap: f64,
    pub floor: f64,
    pub schemes: Vec<SchemeResult>,
    pub guides: Vec<f64>,
    pub wall_time_seconds: f64,
}

impl ConvergenceReport {
    pub fn scheme(&self, scheme: SplittingScheme) -> Option<&SchemeResult> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }

    pub fn smallest_error(&self) -> f64 {
        self.schemes
            .iter()
            .flat_map(|s| s.measurements.iter().map(|m| m.error))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn norm_label(&self) -> String {
        self.norm.to_string()
    }
}

/// Holds assembled operators (with their eigendecompositions) so that studies
/// on the same coefficients and grid do not repeat the dense eigensolve.
#[derive(Debug, Default)]
pub struct Workbench {
    operators: Mutex<Vec<Arc<DiscreteOperator>>>,
}

impl Workbench {
    pub fn new() -> Self {
        Self::default()
    }

    /// Discretizes `spec` on `grid`, sharing a cached operator when one
    /// matches.
    pub fn discretize(&self, spec: &ProblemSpec, grid: Grid) -> Result<DiscreteProblem> {
        let mut cached = self.operators.lock().unwrap_or_else(|e| e.into_inner());
        for l in cached.iter() {
            if l.dim() != grid.len() {
                continue;
            }
            match DiscreteProblem::with_shared_operator(spec, grid, l.clone()) {
                Ok(p) => return Ok(p),
                Err(Error::InvalidConfig(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        let problem = DiscreteProblem::new(spec, grid)?;
        cached.push(problem.shared_operator());
        Ok(problem)
    }

    pub fn run(&self, cfg: &StudyConfig) -> Result<ConvergenceReport> {
        cfg.validate()?;
        let spec = problem_by_label(&cfg.problem)?;
        let grid = Grid::square(cfg.grid)?;
        let problem = self.discretize(&spec, grid)?;
        run_on(cfg, &problem)
    }
}

/// Runs a study with a fresh [`Workbench`].
pub fn run_convergence_study(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    Workbench::new().run(cfg)
}

fn run_on(cfg: &StudyConfig, problem: &DiscreteProblem) -> Result<ConvergenceReport> {
    let started = Instant::now();
    let l = problem.operator();
    l.decompose()?;
    let t = cfg.final_time;
    let ref_steps = cfg.reference_steps();
    let (reference, check) = rayon::join(
        || reference_solve(l, problem, TimeGrid::new(t, ref_steps)?),
        || reference_solve(l, problem, TimeGrid::new(t, 2 * ref_steps)?),
    );
    let reference = reference?;
    let gap = measure(cfg.norm, l, &reference.sub(&check?)?)?;

    let jobs: Vec<(SplittingScheme, usize, f64)> = cfg
        .schemes
        .iter()
        .flat_map(|&s| cfg.step_counts().into_iter().map(move |(n, h)| (s, n, h)))
        .collect();
    let errors = jobs
        .par_iter()
        .map(|&(scheme, steps, _)| {
            let u = integrate(scheme, problem, TimeGrid::new(t, steps)?)?;
            measure(cfg.norm, l, &u.sub(&reference)?)
        })
        .collect::<Result<Vec<f64>>>()?;

    let smallest = errors.iter().copied().fold(f64::INFINITY, f64::min);
    if !(gap <= GAP_TOLERANCE * smallest) {
        return Err(Error::ReferenceInconsistent { gap, smallest });
    }
    let floor = FLOOR_FACTOR * gap;
    let per_scheme = cfg.step_counts().len();
    let schemes = cfg
        .schemes
        .iter()
        .enumerate()
        .map(|(i, &scheme)| {
            let measurements: Vec<Measurement> = jobs[i * per_scheme..(i + 1) * per_scheme]
                .iter()
                .zip(&errors[i * per_scheme..(i + 1) * per_scheme])
                .map(|(&(_, steps, h), &error)| Measurement { h, steps, error })
                .collect();
            let points: Vec<(f64, f64)> = measurements.iter().map(|m| (m.h, m.error)).collect();
            let fit = match fit_order(&points, floor) {
                Ok(f) => Some(f),
                Err(Error::TooFewPoints(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(SchemeResult {
                scheme,
                local_orders: local_orders(&points),
                measurements,
                fit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport {
        problem: cfg.problem.clone(),
        norm: cfg.norm,
        grid: problem.grid(),
        final_time: t,
        reference_steps: ref_steps,
        reference_gap: gap,
        floor,
        schemes,
        guides: cfg.guide_slopes(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(problem: &str, norm: NormKind) -> StudyConfig {
        StudyConfig {
            problem: problem.into(),
            norm,
            grid: 7,
            kmin: 2,
            kmax: 6,
            ref_factor: 8,
            ..StudyConfig::default()
        }
    }

    #[test]
    fn config_defaults_and_json_keys() {
        let cfg: StudyConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, StudyConfig::default());
        assert_eq!(cfg.step_counts().len(), 8);
        assert_eq!(cfg.step_counts()[0], (8, 0.125));
        let cfg: StudyConfig = serde_json::from_str(
            r#"{"problem": "example2", "schemes": "lie,strangb", "norm": "frac:0.5",
                "grid": 15, "T": 0.5, "kmin": 2, "kmax": 5, "ref-factor": 16, "plot": true}"#,
        )
        .unwrap();
        assert_eq!(cfg.schemes, vec![SplittingScheme::Lie, SplittingScheme::StrangB]);
        assert_eq!(cfg.norm, NormKind::Fractional(0.5));
        assert_eq!(cfg.final_time, 0.5);
        assert_eq!(cfg.reference_steps(), 32 * 16);
        assert!(serde_json::from_str::<StudyConfig>(r#"{"gird": 3}"#).is_err());
        let back: StudyConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn config_validation() {
        let ok = StudyConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            StudyConfig { schemes: vec![], ..ok.clone() },
            StudyConfig { grid: 0, ..ok.clone() },
            StudyConfig { grid: 100, ..ok.clone() },
            StudyConfig { kmin: 6, kmax: 5, ..ok.clone() },
            StudyConfig { ref_factor: 4, ..ok.clone() },
            StudyConfig { final_time: -1.0, ..ok.clone() },
            StudyConfig { threads: Some(0), ..ok.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn small_study_runs() {
        let cfg = StudyConfig {
            kmin: 5,
            kmax: 9,
            ..tiny("example2", NormKind::L2)
        };
        let report = run_convergence_study(&cfg).unwrap();
        assert_eq!(report.schemes.len(), 3);
        for s in &report.schemes {
            assert_eq!(s.measurements.len(), 5);
            assert!(s.measurements.iter().all(|m| m.error > 0.0));
        }
        assert!(report.reference_gap < GAP_TOLERANCE * report.smallest_error());
        let lie = report.scheme(SplittingScheme::Lie).unwrap().order().unwrap();
        assert!((0.7..1.3).contains(&lie), "{lie}");
    }

    #[test]
    fn unknown_problem() {
        assert!(matches!(
            run_convergence_study(&tiny("example7", NormKind::L2)),
            Err(Error::UnknownProblem(_))
        ));
    }

    #[test]
    fn exact_schemes_trip_the_reference_check() {
        // splitting is exact for commuting operators, so every error is at
        // round-off level and no gap can be small relative to it
        let cfg = StudyConfig {
            kmax: 4,
            ..tiny("manufactured:commuting", NormKind::L2)
        };
        assert!(matches!(
            run_convergence_study(&cfg),
            Err(Error::ReferenceInconsistent { .. })
        ));
    }

    #[test]
    fn workbench_reuses_operators() {
        let bench = Workbench::new();
        let grid = Grid::square(6).unwrap();
        let p1 = bench.discretize(&problem_by_label("example1").unwrap(), grid).unwrap();
        let p2 = bench.discretize(&problem_by_label("example3").unwrap(), grid).unwrap();
        assert!(Arc::ptr_eq(&p1.shared_operator(), &p2.shared_operator()));
        let p3 = bench
            .discretize(&problem_by_label("manufactured:commuting").unwrap(), grid)
            .unwrap();
        assert!(!Arc::ptr_eq(&p1.shared_operator(), &p3.shared_operator()));
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let cfg = StudyConfig {
            kmax: 4,
            ..tiny("example1", NormKind::Dual)
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let two = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let a = one.install(|| run_convergence_study(&cfg)).unwrap();
        let b = two.install(|| run_convergence_study(&cfg)).unwrap();
        assert_eq!(a.schemes, b.schemes);
        assert_eq!(a.reference_gap, b.reference_gap);
    }
}
