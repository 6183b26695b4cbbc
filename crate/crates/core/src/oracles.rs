//! Slow reference computations used to cross-check the fast estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::{fit_line, LinearFit};
use crate::scales::HyperbolicCube;
use crate::transform::{Grid2D, HyperbolicCoeffs, Normalization};

/// Largest level [`brute_leader`] accepts without an override.
pub const BRUTE_LEADER_MAX_LEVEL: u32 = 6;

/// Leader of `cube` by enumerating every hyperbolic cube inside it.
pub fn brute_leader(
    coeffs: &HyperbolicCoeffs,
    cube: &HyperbolicCube,
    allow_large: bool,
) -> Result<f64> {
    coeffs.require(Normalization::L1)?;
    let level = coeffs.level();
    if level > BRUTE_LEADER_MAX_LEVEL && !allow_large {
        return Err(Error::CostGuard(format!(
            "brute-force leaders are limited to level {BRUTE_LEADER_MAX_LEVEL}, got {level}"
        )));
    }
    if cube.j1 >= level || cube.j2 >= level {
        return Err(Error::Domain(format!(
            "cube scale ({}, {}) outside level {level}",
            cube.j1, cube.j2
        )));
    }
    let mut best = 0.0f64;
    for j1 in cube.j1..level {
        for j2 in cube.j2..level {
            let (s1, s2) = (j1 - cube.j1, j2 - cube.j2);
            for k1 in cube.k1 << s1..(cube.k1 + 1) << s1 {
                for k2 in cube.k2 << s2..(cube.k2 + 1) << s2 {
                    best = best.max(coeffs.get(j1 as i32, j2 as i32, k1, k2).abs());
                }
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Along `x1`, the row index of the grid.
    X1,
    X2,
}

impl Direction {
    pub fn from_index(index: u8) -> Result<Self> {
        match index {
            1 => Ok(Self::X1),
            2 => Ok(Self::X2),
            _ => Err(Error::Domain(format!(
                "direction must be 1 or 2, got {index}"
            ))),
        }
    }
}

/// Largest difference order accepted by [`finite_difference_exponent`].
pub const MAX_DIFFERENCE_ORDER: u32 = 4;

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `sup_x |Δ^M_{t e_ℓ} f(x)|` with periodic wrap, the increment given in samples.
pub fn difference_sup(grid: &Grid2D, direction: Direction, order: u32, step: usize) -> f64 {
    let n = grid.side();
    let weights: Vec<f64> = (0..=order)
        .map(|k| {
            let sign = if (order - k).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            sign * binomial(order, k)
        })
        .collect();
    let mut best = 0.0f64;
    for i1 in 0..n {
        for i2 in 0..n {
            let mut acc = 0.0;
            for (k, w) in weights.iter().enumerate() {
                let shift = k * step % n;
                acc += w * match direction {
                    Direction::X1 => grid.get((i1 + shift) % n, i2),
                    Direction::X2 => grid.get(i1, (i2 + shift) % n),
                };
            }
            best = best.max(acc.abs());
        }
    }
    best
}

/// Slope of `log2 sup_x |Δ^M_{t e_ℓ} f(x)|` against `log2 t`, an estimate of
/// `min(s / α_ℓ, M)`. Every `t` must be a positive multiple of the sample step `2^-J`.
pub fn finite_difference_exponent(
    grid: &Grid2D,
    direction: Direction,
    order: u32,
    t_grid: &[f64],
) -> Result<LinearFit> {
    if !(1..=MAX_DIFFERENCE_ORDER).contains(&order) {
        return Err(Error::Domain(format!(
            "difference order must lie in 1..={MAX_DIFFERENCE_ORDER}, got {order}"
        )));
    }
    let n = grid.side() as f64;
    let mut x = Vec::with_capacity(t_grid.len());
    let mut y = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let samples = t * n;
        let step = samples.round();
        if !(step >= 1.0 && (samples - step).abs() < 1e-9) {
            return Err(Error::Domain(format!(
                "increment {t} is not a positive multiple of the sample step 1/{n}"
            )));
        }
        let sup = difference_sup(grid, direction, order, step as usize);
        if !(sup > grid.max_abs() * 1e-13 && sup > 0.0) {
            return Err(Error::Degenerate(format!(
                "differences vanish at increment {t}"
            )));
        }
        x.push(t.log2());
        y.push(sup.log2());
    }
    fit_line(&x, &y)
}

/// Dyadic increments `2^-k` for `k` in `fine..=coarse` reversed into increasing `t`.
pub fn dyadic_increments(finest: u32, coarsest: u32) -> Vec<f64> {
    (coarsest..=finest)
        .rev()
        .map(|k| 2f64.powi(-(k as i32)))
        .collect()
}

/// Directional slopes and the regularity/anisotropy they imply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnisotropyEstimate {
    pub s: f64,
    pub a: f64,
    pub slopes: [f64; 2],
    pub fits: [LinearFit; 2],
}

/// From `σ_ℓ = s / α_ℓ` and `α1 + α2 = 2`: `s = 2 σ1 σ2 / (σ1 + σ2)`, `a = s / σ1`.
pub fn anisotropy_from_slopes(sigma1: f64, sigma2: f64) -> Result<(f64, f64)> {
    if !(sigma1 > 0.0 && sigma2 > 0.0 && sigma1.is_finite() && sigma2.is_finite()) {
        return Err(Error::Degenerate(format!(
            "directional slopes must be positive, got {sigma1} and {sigma2}"
        )));
    }
    let s = 2.0 * sigma1 * sigma2 / (sigma1 + sigma2);
    Ok((s, s / sigma1))
}

/// Increments and difference order used by [`detect_anisotropy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionOptions {
    pub order: u32,
    pub t_grid: Vec<f64>,
}

impl DetectionOptions {
    /// Second differences at dyadic increments from two samples, `2^-(J-1)`, up to `1/8`.
    pub fn for_level(level: u32) -> Self {
        Self {
            order: 2,
            t_grid: dyadic_increments(level.saturating_sub(1).max(3), 3),
        }
    }
}

/// Regularity and anisotropy recovered from the two directional finite-difference slopes.
pub fn detect_anisotropy(grid: &Grid2D, options: &DetectionOptions) -> Result<AnisotropyEstimate> {
    let f1 = finite_difference_exponent(grid, Direction::X1, options.order, &options.t_grid)?;
    let f2 = finite_difference_exponent(grid, Direction::X2, options.order, &options.t_grid)?;
    let (s, a) = anisotropy_from_slopes(f1.slope, f2.slope)?;
    Ok(AnisotropyEstimate {
        s,
        a,
        slopes: [f1.slope, f2.slope],
        fits: [f1, f2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn brute_leader_examples() {
        let mut c = HyperbolicCoeffs::zeros(4, Normalization::L1).unwrap();
        c.set(3, 2, 5, 1, -0.4);
        let inside = HyperbolicCube {
            j1: 1,
            j2: 1,
            k1: 1,
            k2: 0,
        };
        assert_eq!(brute_leader(&c, &inside, false).unwrap(), 0.4);
        let outside = HyperbolicCube {
            j1: 1,
            j2: 1,
            k1: 0,
            k2: 0,
        };
        assert_eq!(brute_leader(&c, &outside, false).unwrap(), 0.0);
        let finest = HyperbolicCube {
            j1: 3,
            j2: 2,
            k1: 5,
            k2: 1,
        };
        assert_eq!(brute_leader(&c, &finest, false).unwrap(), 0.4);
    }

    #[test]
    fn brute_leader_cost_guard() {
        let c = HyperbolicCoeffs::zeros(7, Normalization::L1).unwrap();
        let cube = HyperbolicCube {
            j1: 6,
            j2: 6,
            k1: 0,
            k2: 0,
        };
        assert!(matches!(
            brute_leader(&c, &cube, false),
            Err(Error::CostGuard(_))
        ));
        assert_eq!(brute_leader(&c, &cube, true).unwrap(), 0.0);
    }

    #[test]
    fn sine_second_differences_saturate() {
        let g = Grid2D::from_fn(8, |x1, _| (2.0 * PI * x1).sin()).unwrap();
        let f = finite_difference_exponent(&g, Direction::X1, 2, &dyadic_increments(8, 6)).unwrap();
        assert!((f.slope - 2.0).abs() < 0.01, "{}", f.slope);
        assert!(matches!(
            finite_difference_exponent(&g, Direction::X2, 2, &[1.0 / 64.0, 1.0 / 32.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn constant_and_bad_increments() {
        let g = Grid2D::from_fn(6, |_, _| 3.0).unwrap();
        assert!(matches!(
            finite_difference_exponent(&g, Direction::X1, 1, &[1.0 / 64.0, 1.0 / 32.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(finite_difference_exponent(&g, Direction::X1, 1, &[1.0 / 128.0]).is_err());
        assert!(finite_difference_exponent(&g, Direction::X1, 1, &[0.01]).is_err());
        assert!(finite_difference_exponent(&g, Direction::X1, 5, &[1.0 / 64.0]).is_err());
        assert!(Direction::from_index(3).is_err());
    }

    #[test]
    fn power_profile_slope() {
        // |x2 - 1/2|^0.5 has first differences of size t^0.5 around the kink.
        let g = Grid2D::from_fn(10, |_, x2| (x2 - 0.5).abs().sqrt()).unwrap();
        let f = finite_difference_exponent(&g, Direction::X2, 1, &dyadic_increments(9, 5)).unwrap();
        assert!((f.slope - 0.5).abs() < 0.02, "{}", f.slope);
    }

    #[test]
    fn slope_algebra_examples() {
        assert_eq!(anisotropy_from_slopes(0.5, 0.5).unwrap(), (0.5, 1.0));
        let (s, a) = anisotropy_from_slopes(0.75, 0.5).unwrap();
        assert!((s - 0.6).abs() < 1e-15 && (a - 0.8).abs() < 1e-15);
        assert!(anisotropy_from_slopes(0.0, 0.5).is_err());
        assert!(anisotropy_from_slopes(-0.1, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn slope_algebra_inverts_exact_slopes(s in 0.05f64..3.0, a in 0.05f64..1.95) {
            let (s_hat, a_hat) = anisotropy_from_slopes(s / a, s / (2.0 - a)).unwrap();
            prop_assert!((s_hat - s).abs() <= 1e-12 * s.max(1.0));
            prop_assert!((a_hat - a).abs() <= 1e-12);
        }
    }
}
