use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares slope of `log(error)` against `log(h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub order: f64,
    /// RMS deviation of the data from the fitted line, in natural-log units.
    pub residual: f64,
    pub points_used: usize,
}

/// Fits the observed order to `(h, error)` pairs, ignoring errors below
/// `floor` (pass `0.0` to keep everything). Needs three usable points.
pub fn fit_order(points: &[(f64, f64)], floor: f64) -> Result<OrderFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(h, e)| *h > 0.0 && *e > 0.0 && h.is_finite() && e.is_finite() && *e >= floor)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    let n = usable.len();
    if n < 3 {
        return Err(Error::TooFewPoints(n));
    }
    let nf = n as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::TooFewPoints(1));
    }
    let order = sxy / sxx;
    let intercept = my - order * mx;
    let residual = (usable
        .iter()
        .map(|(x, y)| (y - intercept - order * x).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();
    Ok(OrderFit {
        order,
        residual,
        points_used: n,
    })
}

/// Orders between consecutive points, `log(e_k/e_{k+1}) / log(h_k/h_{k+1})`.
pub fn local_orders(points: &[(f64, f64)]) -> Vec<f64> {
    points
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect()
}
