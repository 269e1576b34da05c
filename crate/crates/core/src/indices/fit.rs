//! Log-log least-squares exponent fits.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: Vec<(usize, f64)>,
    pub floor_applied: bool,
}

/// Slope of `log(value)` against `log(N)`.
pub fn fit_exponent(points: &[(usize, f64)]) -> Result<ExponentFit> {
    if points.len() < 3 {
        return Err(Error::InvalidFit(format!("need at least 3 points, got {}", points.len())));
    }
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::InvalidFit(format!("N must be strictly increasing ({} then {})", w[0].0, w[1].0)));
        }
    }
    if points[0].0 == 0 {
        return Err(Error::InvalidFit("N must be positive".into()));
    }
    if let Some(&(n, v)) = points.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidFit(format!("value at N={n} is {v}; log-log fit needs positive values")));
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, v)| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (ssr / (k - 2.0) / sxx).sqrt();
    Ok(ExponentFit {
        exponent: slope,
        stderr,
        intercept,
        points: points.to_vec(),
        floor_applied: false,
    })
}

/// Both regressions of a floored index, plus the one the floor rule selects.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlooredFits {
    pub selected: ExponentFit,
    pub floored: ExponentFit,
    /// Absent when some raw value is not positive.
    pub unfloored: Option<ExponentFit>,
}

/// Fits `max(N, raw)` and `raw`. The unfloored fit is selected when `raw > N`
/// at every point; otherwise the floored fit is selected and flagged.
pub fn fit_floored(raw: &[(usize, f64)]) -> Result<FlooredFits> {
    let floored_pts: Vec<(usize, f64)> = raw.iter().map(|&(n, v)| (n, v.max(n as f64))).collect();
    let mut floored = fit_exponent(&floored_pts)?;
    let active = raw.iter().any(|&(n, v)| !(v > n as f64));
    floored.floor_applied = active;
    let unfloored = if raw.iter().all(|(_, v)| *v > 0.0) {
        Some(fit_exponent(raw)?)
    } else {
        None
    };
    let selected = match (&unfloored, active) {
        (Some(u), false) => u.clone(),
        _ => floored.clone(),
    };
    Ok(FlooredFits {
        selected,
        floored,
        unfloored,
    })
}
