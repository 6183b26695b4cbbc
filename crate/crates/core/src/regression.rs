//! Ordinary least-squares line fits used by every scaling estimator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 when the ordinates are constant.
    pub r_squared: f64,
    pub points: usize,
}

/// Fits `y = slope * x + intercept`. Needs at least two distinct abscissae.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "regression needs matching lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    if x.len() < 2 {
        return Err(Error::Degenerate("fewer than two regression points".into()));
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let (dx, dy) = (xi - mx, yi - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 {
        return Err(Error::Degenerate(
            "regression abscissae are all equal".into(),
        ));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).min(1.0)
    } else {
        1.0
    };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        points: x.len(),
    })
}

/// Number of distinct values in `x` (exact comparison).
pub fn distinct_count(x: &[f64]) -> usize {
    let mut v: Vec<f64> = x.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}
