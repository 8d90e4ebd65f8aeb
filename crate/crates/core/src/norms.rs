//! Error norms and the numerical smoothing probe.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, LineOperatorFamily};
use crate::integrators::SplittingScheme;
use crate::linalg::{cg_solve, spectral_apply, DiscreteOperator, CG_DEFAULT_TOL};

/// How an error vector is measured.
///
/// `Fractional(γ)` is `‖(-L)^{-γ} e‖`, so `Fractional(0)` is the discrete L²
/// norm and `Fractional(1)` coincides with `Dual`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NormKind {
    L2,
    Dual,
    Fractional(f64),
}

impl NormKind {
    pub fn fractional(gamma: f64) -> Result<Self> {
        if (0.0..=2.0).contains(&gamma) {
            Ok(Self::Fractional(gamma))
        } else {
            Err(Error::InvalidConfig(format!(
                "fractional exponent must lie in [0, 2], got {gamma}"
            )))
        }
    }

    /// Whether measuring in this norm needs `L`.
    pub fn needs_operator(&self) -> bool {
        !matches!(self, Self::L2)
    }

    /// Human-readable name for plot labels.
    pub fn display_name(&self) -> String {
        match self {
            Self::L2 => "discrete L2 norm".into(),
            Self::Dual => "dual norm |L^-1 e|".into(),
            Self::Fractional(g) => format!("fractional norm |(-L)^-{g} e|"),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::L2 => f.write_str("l2"),
            Self::Dual => f.write_str("dual"),
            Self::Fractional(g) => write!(f, "frac:{g}"),
        }
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Self::L2),
            "dual" => Ok(Self::Dual),
            other => match other.strip_prefix("frac:") {
                Some(g) => {
                    let gamma: f64 = g
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("bad fractional exponent '{g}'")))?;
                    Self::fractional(gamma)
                }
                None => Err(Error::InvalidConfig(format!("unknown norm '{s}'"))),
            },
        }
    }
}

impl TryFrom<String> for NormKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NormKind> for String {
    fn from(n: NormKind) -> String {
        n.to_string()
    }
}

/// `sqrt(dx·dy·Σ u²)`
pub fn discrete_l2(u: &GridFunction) -> f64 {
    let g = u.grid();
    (g.dx() * g.dy()).sqrt() * u.euclidean_norm()
}

fn check_dim(l: &DiscreteOperator, u: &GridFunction) -> Result<()> {
    if l.dim() != u.values().len() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            found: u.values().len(),
        });
    }
    Ok(())
}

/// `discrete_l2(L⁻¹ u)`, spectrally if `L` has a cached decomposition and by
/// conjugate gradients otherwise.
pub fn dual_norm(l: &DiscreteOperator, u: &GridFunction) -> Result<f64> {
    check_dim(l, u)?;
    let g = u.grid();
    let weight = (g.dx() * g.dy()).sqrt();
    match l.eigen() {
        Some(eig) => {
            let c = eig.to_eigenbasis(u.values());
            let sum: f64 = c
                .iter()
                .zip(eig.eigenvalues())
                .map(|(ci, lam)| (ci / lam).powi(2))
                .sum();
            Ok(weight * sum.sqrt())
        }
        None => dual_norm_cg(l, u),
    }
}

/// `discrete_l2(L⁻¹ u)` by conjugate gradients regardless of any cached
/// decomposition.
pub fn dual_norm_cg(l: &DiscreteOperator, u: &GridFunction) -> Result<f64> {
    check_dim(l, u)?;
    let x = cg_solve(l, u.values(), CG_DEFAULT_TOL)?;
    let g = u.grid();
    Ok((g.dx() * g.dy()).sqrt() * x.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// `(-L)^γ u = Q (-Λ)^γ Qᵀ u`; `L` must already be decomposed.
pub fn fractional_apply(l: &DiscreteOperator, gamma: f64, u: &GridFunction) -> Result<GridFunction> {
    check_dim(l, u)?;
    let eig = l.eigen().ok_or(Error::DecompositionMissing)?;
    if let Some(&top) = eig.eigenvalues().last() {
        if top >= 0.0 {
            return Err(Error::InvalidConfig(
                "fractional powers need a negative definite operator".into(),
            ));
        }
    }
    let v = spectral_apply(eig, u.values(), |lam| (-lam).powf(gamma))?;
    GridFunction::new(u.grid(), v)
}

/// The error of `u` in the norm `kind`.
pub fn measure(kind: NormKind, l: &DiscreteOperator, u: &GridFunction) -> Result<f64> {
    match kind {
        NormKind::L2 => Ok(discrete_l2(u)),
        NormKind::Dual => dual_norm(l, u),
        NormKind::Fractional(g) if g == 0.0 => Ok(discrete_l2(u)),
        NormKind::Fractional(g) => {
            l.decompose()?;
            Ok(discrete_l2(&fractional_apply(l, -g, u)?))
        }
    }
}

const PROBE_ITERATIONS: usize = 30;
const PROBE_SEED: u64 = 0x005e_ed0f_5b17;

/// Estimates `‖(-L)^α S^n‖₂` for `n = 1..=n_max`, where `S` is the Lie
/// product `e^{hA} e^{hB}` or the Strang product `e^{h/2 A} e^{hB} e^{h/2 A}`,
/// by power iteration on `(S^n)ᵀ (-L)^{2α} S^n`. Returns `(t_n, estimate)`.
pub fn smoothing_probe(
    a: &LineOperatorFamily,
    b: &LineOperatorFamily,
    l: &DiscreteOperator,
    alpha: f64,
    scheme: SplittingScheme,
    h: f64,
    n_max: usize,
) -> Result<Vec<(f64, f64)>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidConfig(format!("step size must be positive, got {h}")));
    }
    let grid = a.grid();
    if b.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if l.dim() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: l.dim(),
        });
    }
    let (a_prop, b_prop) = match scheme {
        SplittingScheme::Lie => (a.propagator(h)?, b.propagator(h)?),
        SplittingScheme::Strang | SplittingScheme::StrangB => {
            (a.propagator(h / 2.0)?, b.propagator(h)?)
        }
    };
    let n = grid.len();
    let mut tmp = vec![0.0; n];
    // S v and Sᵀ v in place; the Strang product is symmetric
    let mut apply_s = |v: &mut Vec<f64>, transpose: bool| match (scheme, transpose) {
        (SplittingScheme::Lie, false) => {
            b_prop.apply_slice(v, &mut tmp);
            a_prop.apply_slice(&tmp, v);
        }
        (SplittingScheme::Lie, true) => {
            a_prop.apply_slice(v, &mut tmp);
            b_prop.apply_slice(&tmp, v);
        }
        _ => {
            a_prop.apply_slice(v, &mut tmp);
            b_prop.apply_slice(&tmp, v);
            a_prop.apply_slice(v, &mut tmp);
            std::mem::swap(v, &mut tmp);
        }
    };
    // (-L)^{2α} through the sparse operator when 2α is an integer
    let two_alpha = 2.0 * alpha;
    let integer_power = (two_alpha.fract() == 0.0).then_some(two_alpha as usize);
    if integer_power.is_none() {
        l.decompose()?;
    }
    let weight = |v: &[f64]| -> Result<Vec<f64>> {
        match integer_power {
            Some(p) => {
                let mut w = v.to_vec();
                for _ in 0..p {
                    w = l.apply(&w).into_iter().map(|x| -x).collect();
                }
                Ok(w)
            }
            None => {
                let eig = l.eigen().ok_or(Error::DecompositionMissing)?;
                spectral_apply(eig, v, |lam| (-lam).powf(two_alpha))
            }
        }
    };
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();

    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut out = Vec::with_capacity(n_max);
    for steps in 1..=n_max {
        let mut v = start.clone();
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let mut estimate = 0.0;
        for _ in 0..PROBE_ITERATIONS {
            let mut y = v.clone();
            for _ in 0..steps {
                apply_s(&mut y, false);
            }
            let mut w = weight(&y)?;
            // ‖(-L)^α S^n v‖² = yᵀ (-L)^{2α} y for unit v
            estimate = dot(&y, &w).max(0.0).sqrt();
            for _ in 0..steps {
                apply_s(&mut w, true);
            }
            let wn = dot(&w, &w).sqrt();
            if wn == 0.0 || !wn.is_finite() {
                break;
            }
            v = w.into_iter().map(|x| x / wn).collect();
        }
        out.push((steps as f64 * h, estimate));
    }
    Ok(out)
}
