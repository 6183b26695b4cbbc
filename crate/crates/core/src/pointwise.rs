//! Pointwise anisotropic Hölder exponents from local leaders, and a
//! two-microlocal diagnostic on the raw coefficients.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anisotropy::Anisotropy;
use crate::error::{Error, Result};
use crate::leaders::{check_point, LeaderPyramid, ZERO_THRESHOLD};
use crate::regression::{distinct_count, fit_line, LinearFit};
use crate::scales::{default_leader_range, gamma_set, JRange};
use crate::transform::{HyperbolicCoeffs, Normalization};

/// Which scale pairs enter the pointwise regression.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSelection {
    /// Pairs of `Γ_j(α)` for `j` in the shell range.
    #[default]
    GammaBand,
    /// Every available pair whose scale index `m` lies in the shell range.
    AllPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseEstimate {
    pub x0: [f64; 2],
    pub alpha: Anisotropy,
    pub h_hat: f64,
    pub fit: LinearFit,
    pub scales_used: Vec<(u32, u32)>,
}

fn selected_pairs(
    level: u32,
    alpha: Anisotropy,
    range: JRange,
    mode: PairSelection,
) -> Result<Vec<(u32, u32)>> {
    let mut pairs = BTreeSet::new();
    match mode {
        PairSelection::GammaBand => {
            for j in range.iter() {
                pairs.extend(gamma_set(j, alpha)?.available(level));
            }
        }
        PairSelection::AllPairs => {
            for j1 in 0..level {
                for j2 in 0..level {
                    let m = alpha.scale_index(j1, j2);
                    if range.lo as f64 <= m && m <= range.hi as f64 {
                        pairs.insert((j1, j2));
                    }
                }
            }
        }
    }
    Ok(pairs.into_iter().collect())
}

fn resolve_range(level: u32, alpha: Anisotropy, j_range: Option<JRange>) -> Result<JRange> {
    match j_range {
        Some(r) => Ok(r),
        None => default_leader_range(level, alpha),
    }
}

/// `h_hat(x0)`: minus the slope of `log2 d_{j1,j2}(x0)` against
/// `m = max(j1/a1, j2/a2)` over the selected pairs with nonzero local leader.
pub fn pointwise_exponent(
    pyramid: &LeaderPyramid,
    x0: [f64; 2],
    alpha: Anisotropy,
    j_range: Option<JRange>,
    mode: PairSelection,
) -> Result<PointwiseEstimate> {
    check_point(x0)?;
    let range = resolve_range(pyramid.level(), alpha, j_range)?;
    let pairs = selected_pairs(pyramid.level(), alpha, range, mode)?;
    estimate_at(pyramid, x0, alpha, &pairs)
}

fn estimate_at(
    pyramid: &LeaderPyramid,
    x0: [f64; 2],
    alpha: Anisotropy,
    pairs: &[(u32, u32)],
) -> Result<PointwiseEstimate> {
    let mut points = Vec::with_capacity(pairs.len());
    let mut used = Vec::with_capacity(pairs.len());
    for &(j1, j2) in pairs {
        let d = pyramid.local_leader(x0, j1, j2)?;
        if d >= ZERO_THRESHOLD {
            points.push((alpha.scale_index(j1, j2), d.log2()));
            used.push((j1, j2));
        }
    }
    // A canonical order makes the regression independent of how the pairs were listed.
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let (x, y): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
    if distinct_count(&x) < 3 {
        return Err(Error::Degenerate(format!(
            "fewer than 3 distinct scale indices with nonzero local leaders at ({}, {})",
            x0[0], x0[1]
        )));
    }
    let fit = fit_line(&x, &y)?;
    Ok(PointwiseEstimate {
        x0,
        alpha,
        h_hat: -fit.slope,
        fit,
        scales_used: used,
    })
}

/// Torus distance between two points of `[0, 1)`.
fn torus_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Smallest `C` with `|c_{j1,j2,k1,k2}| <= C min(2^(-j1 s/a1) + |k1 2^-j1 - a|^(s/a1),
/// 2^(-j2 s/a2) + |k2 2^-j2 - b|^(s/a2))` over every wavelet position, `x0 = (a, b)`.
pub fn two_microlocal_constant(
    coeffs: &HyperbolicCoeffs,
    x0: [f64; 2],
    s: f64,
    alpha: Anisotropy,
) -> Result<f64> {
    coeffs.require(Normalization::L1)?;
    check_point(x0)?;
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!(
            "two-microlocal exponent must be positive, got {s}"
        )));
    }
    let level = coeffs.level();
    let (e1, e2) = (s / alpha.a1(), s / alpha.a2());
    let pairs: Vec<(u32, u32)> = (0..level)
        .flat_map(|a| (0..level).map(move |b| (a, b)))
        .collect();
    let best = pairs
        .par_iter()
        .map(|&(j1, j2)| {
            let (w1, w2) = (2f64.powi(-(j1 as i32)), 2f64.powi(-(j2 as i32)));
            let row: Vec<f64> = (0..1usize << j1)
                .map(|k1| w1.powf(e1) + torus_distance(k1 as f64 * w1, x0[0]).powf(e1))
                .collect();
            let col: Vec<f64> = (0..1usize << j2)
                .map(|k2| w2.powf(e2) + torus_distance(k2 as f64 * w2, x0[1]).powf(e2))
                .collect();
            let block = coeffs.block(j1 as i32, j2 as i32);
            let mut best = 0.0f64;
            for (k1, r) in row.iter().enumerate() {
                for (k2, c) in col.iter().enumerate() {
                    best = best.max(block[(k1 << j2) + k2].abs() / r.min(*c));
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// `h_hat` on the lattice `(i1, i2) · stride / 2^J`; failed fits are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentMap {
    pub stride: usize,
    /// Lattice points per axis.
    pub side: usize,
    pub alpha: Anisotropy,
    pub j_range: JRange,
    /// Row-major, row index along `x1`.
    pub values: Vec<Option<f64>>,
}

impl ExponentMap {
    pub fn get(&self, i1: usize, i2: usize) -> Option<f64> {
        self.values[i1 * self.side + i2]
    }

    pub fn point(&self, i1: usize, i2: usize) -> [f64; 2] {
        let n = (self.side * self.stride) as f64;
        [(i1 * self.stride) as f64 / n, (i2 * self.stride) as f64 / n]
    }

    /// Lattice indices and value of the smallest finite exponent.
    pub fn argmin(&self) -> Option<((usize, usize), f64)> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| ((i / self.side, i % self.side), v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// [`pointwise_exponent`] at every lattice point, in parallel.
pub fn exponent_map(
    pyramid: &LeaderPyramid,
    alpha: Anisotropy,
    j_range: Option<JRange>,
    stride: usize,
    mode: PairSelection,
) -> Result<ExponentMap> {
    let n = 1usize << pyramid.level();
    if stride == 0 || !n.is_multiple_of(stride) {
        return Err(Error::Domain(format!(
            "stride {stride} does not divide the grid side {n}"
        )));
    }
    let range = resolve_range(pyramid.level(), alpha, j_range)?;
    let pairs = selected_pairs(pyramid.level(), alpha, range, mode)?;
    let side = n / stride;
    let values = (0..side * side)
        .into_par_iter()
        .map(|i| {
            let x0 = [
                ((i / side) * stride) as f64 / n as f64,
                ((i % side) * stride) as f64 / n as f64,
            ];
            estimate_at(pyramid, x0, alpha, &pairs)
                .ok()
                .map(|e| e.h_hat)
        })
        .collect();
    Ok(ExponentMap {
        stride,
        side,
        alpha,
        j_range: range,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::Filter;
    use crate::leaders::leader_pyramid;
    use crate::transform::{hyperbolic_forward, Grid2D};
    use std::f64::consts::PI;

    fn pyramid_from(level: u32, f: impl Fn(u32, u32, usize, usize) -> f64) -> LeaderPyramid {
        let mut blocks = Vec::new();
        for j1 in 0..level {
            for j2 in 0..level {
                let cols = 1usize << j2;
                blocks.push(
                    (0..1usize << (j1 + j2))
                        .map(|i| f(j1, j2, i / cols, i % cols))
                        .collect(),
                );
            }
        }
        LeaderPyramid::from_blocks(level, blocks).unwrap()
    }

    fn transposed(p: &LeaderPyramid) -> LeaderPyramid {
        let level = p.level();
        pyramid_from(level, |j1, j2, k1, k2| p.get(j2, j1, k2, k1))
    }

    #[test]
    fn equal_leaders_give_zero_exponent() {
        let p = pyramid_from(9, |_, _, _, _| 0.3);
        let e = pointwise_exponent(
            &p,
            [0.2, 0.7],
            Anisotropy::ISOTROPIC,
            None,
            PairSelection::GammaBand,
        )
        .unwrap();
        assert!(e.h_hat.abs() < 1e-12);
        assert!(!e.scales_used.is_empty());
    }

    #[test]
    fn exact_power_law() {
        let alpha = Anisotropy::new(0.9).unwrap();
        let p = pyramid_from(10, |j1, j2, _, _| {
            2f64.powf(-0.9 * alpha.scale_index(j1, j2))
        });
        for mode in [PairSelection::GammaBand, PairSelection::AllPairs] {
            let e = pointwise_exponent(&p, [0.5, 0.25], alpha, None, mode).unwrap();
            assert!((e.h_hat - 0.9).abs() < 1e-12, "{mode:?}: {}", e.h_hat);
        }
    }

    #[test]
    fn domain_and_degenerate_errors() {
        let p = pyramid_from(9, |_, _, _, _| 0.0);
        assert!(matches!(
            pointwise_exponent(
                &p,
                [0.5, 0.5],
                Anisotropy::ISOTROPIC,
                None,
                PairSelection::GammaBand
            ),
            Err(Error::Degenerate(_))
        ));
        assert!(pointwise_exponent(
            &p,
            [1.2, 0.5],
            Anisotropy::ISOTROPIC,
            None,
            PairSelection::GammaBand
        )
        .is_err());
    }

    #[test]
    fn axis_swap_gives_identical_estimate() {
        let alpha = Anisotropy::new(1.3).unwrap();
        let p = pyramid_from(9, |j1, j2, k1, k2| {
            2f64.powf(-0.5 * alpha.scale_index(j1, j2))
                * (1.0 + ((k1 * 13 + k2 * 7 + j1 as usize) % 11) as f64 / 10.0)
        });
        let q = transposed(&p);
        for x0 in [[0.1, 0.8], [0.5, 0.5], [0.93, 0.02]] {
            let a = pointwise_exponent(&p, x0, alpha, None, PairSelection::GammaBand).unwrap();
            let b = pointwise_exponent(
                &q,
                [x0[1], x0[0]],
                alpha.swapped(),
                None,
                PairSelection::GammaBand,
            )
            .unwrap();
            assert_eq!(a.h_hat.to_bits(), b.h_hat.to_bits());
        }
    }

    #[test]
    fn smooth_field_saturates() {
        let g =
            Grid2D::from_fn(10, |x1, x2| (2.0 * PI * x1).sin() * (2.0 * PI * x2).cos()).unwrap();
        let f = Filter::default();
        let c = hyperbolic_forward(&g, &f, Normalization::L1).unwrap();
        let p = leader_pyramid(&c).unwrap();
        let e = pointwise_exponent(
            &p,
            [0.3, 0.6],
            Anisotropy::ISOTROPIC,
            None,
            PairSelection::GammaBand,
        )
        .unwrap();
        assert!(e.h_hat >= f.vanishing_moments() as f64 - 0.5, "{}", e.h_hat);
    }

    #[test]
    fn two_microlocal_examples() {
        let alpha = Anisotropy::new(0.8).unwrap();
        let mut c = HyperbolicCoeffs::zeros(5, Normalization::L1).unwrap();
        assert_eq!(
            two_microlocal_constant(&c, [0.5, 0.5], 0.7, alpha).unwrap(),
            0.0
        );
        c.set(2, 3, 3, 1, -0.2);
        let x0 = [0.1, 0.9];
        let b1 = 0.25f64.powf(0.7 / 0.8) + 0.35f64.powf(0.7 / 0.8);
        let b2 = 0.125f64.powf(0.7 / 1.2) + 0.225f64.powf(0.7 / 1.2);
        let expected = 0.2 / b1.min(b2);
        let got = two_microlocal_constant(&c, x0, 0.7, alpha).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected);
        assert!(two_microlocal_constant(&c, x0, 0.0, alpha).is_err());
        let l2 = c.renormalize(Normalization::L2);
        assert!(two_microlocal_constant(&l2, x0, 0.7, alpha).is_err());
    }

    #[test]
    fn map_lattice() {
        let alpha = Anisotropy::ISOTROPIC;
        let p = pyramid_from(8, |j1, j2, k1, k2| {
            2f64.powf(-0.4 * alpha.scale_index(j1, j2)) * (1.0 + ((k1 + 3 * k2) % 5) as f64 / 7.0)
        });
        let m = exponent_map(&p, alpha, None, 256, PairSelection::GammaBand).unwrap();
        assert_eq!(m.side, 1);
        let e = pointwise_exponent(&p, [0.0, 0.0], alpha, None, PairSelection::GammaBand).unwrap();
        assert_eq!(m.get(0, 0), Some(e.h_hat));
        let m = exponent_map(&p, alpha, None, 64, PairSelection::GammaBand).unwrap();
        assert_eq!(m.side, 4);
        let e =
            pointwise_exponent(&p, m.point(2, 3), alpha, None, PairSelection::GammaBand).unwrap();
        assert_eq!(m.get(2, 3), Some(e.h_hat));
        assert!(exponent_map(&p, alpha, None, 3, PairSelection::GammaBand).is_err());
    }
}
