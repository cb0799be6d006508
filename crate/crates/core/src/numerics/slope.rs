use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Least-squares power-law fit `P ≈ C · rho^-diversity` in log–log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// Negated log–log slope, so a decaying curve reports a positive order.
    pub diversity: f64,
    /// Intercept of the fitted line, `ln C`.
    pub intercept: f64,
    /// `(ln rho, ln P)` pairs the line was fitted to.
    pub points: Vec<(f64, f64)>,
    /// RMS of the log-domain residuals.
    pub residual: f64,
}

/// Fits the diversity order to `(rho, probability)` pairs, `rho` linear.
pub fn fit_diversity_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::Invalid(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    for w in points.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(domain("rho grid", "strictly increasing", w[1].0));
        }
    }
    let mut logs = Vec::with_capacity(points.len());
    for &(rho, p) in points {
        if !(rho > 0.0) {
            return Err(domain("rho", "positive", rho));
        }
        if !(p > 0.0) {
            return Err(domain("probability in slope fit", "positive", p));
        }
        logs.push((rho.ln(), p.ln()));
    }
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual = (logs
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(SlopeFit {
        diversity: -slope,
        intercept,
        points: logs,
        residual,
    })
}
