//! Fields with prescribed anisotropic regularity, built on the hyperbolic basis.
//!
//! Every synthesizer is deterministic given its parameters. Random blocks draw
//! from a ChaCha8 stream selected by `(seed, j1, j2)`, so a block does not
//! depend on the grid level or on the other blocks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anisotropy::Anisotropy;
use crate::error::{Error, Result};
use crate::filter::Filter;
use crate::leaders::check_point;
use crate::scales::ScalePair;
use crate::transform::{
    hyperbolic_forward, hyperbolic_inverse, Grid2D, HyperbolicCoeffs, Normalization,
};

/// Grid levels accepted by the synthesizers.
pub const SYNTH_LEVELS: std::ops::RangeInclusive<u32> = 5..=14;

/// Magnitude law of the prescribed-regularity coefficients, `m = max(j1/a1, j2/a2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientProfile {
    /// `2^(-s0 m)`.
    Plain,
    /// `2^(-s0 m) / max(1, m)`.
    InverseScale,
    /// `2^(-s0 m - delta |j1/a1 - j2/a2|)`: scale pairs away from the
    /// anisotropy diagonal are damped geometrically.
    OffDiagonal { delta: f64 },
}

impl Default for CoefficientProfile {
    fn default() -> Self {
        Self::OffDiagonal { delta: 1.0 }
    }
}

impl CoefficientProfile {
    pub fn magnitude(&self, s0: f64, alpha: Anisotropy, j1: u32, j2: u32) -> f64 {
        let m = alpha.scale_index(j1, j2);
        let base = 2f64.powf(-s0 * m);
        match *self {
            Self::Plain => base,
            Self::InverseScale => base / m.max(1.0),
            Self::OffDiagonal { delta } => {
                let off = (j1 as f64 / alpha.a1() - j2 as f64 / alpha.a2()).abs();
                base * 2f64.powf(-delta * off)
            }
        }
    }
}

/// Parameters of a synthesized field, recorded next to the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthParams {
    Prescribed {
        s0: f64,
        a: f64,
        level: u32,
        seed: u64,
        profile: CoefficientProfile,
    },
    Cusp {
        x0: [f64; 2],
        s0: f64,
        a: f64,
        level: u32,
        window: Option<[f64; 2]>,
    },
    Lacunary {
        h1: f64,
        h2: f64,
        gamma: f64,
        a: f64,
        level: u32,
        seed: u64,
    },
    Fbs {
        h1: f64,
        h2: f64,
        level: u32,
        seed: u64,
    },
}

/// Per-block population of a lacunary field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LacunaryCount {
    pub j1: u32,
    pub j2: u32,
    /// Positions carrying the rougher exponent `h1`.
    pub rough: u64,
    /// Positions carrying `h2`.
    pub smooth: u64,
}

/// A synthesized grid with the exact coefficients it was built from and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesized {
    pub grid: Grid2D,
    pub coeffs: HyperbolicCoeffs,
    pub params: SynthParams,
    pub filter: String,
    /// Only set for lacunary fields.
    pub counts: Option<Vec<LacunaryCount>>,
}

/// The random stream of block `(j1, j2)`; scaling directions use `j = -1`.
pub fn block_rng(seed: u64, j1: i32, j2: i32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((((j1 + 1) as u64) << 32) | (j2 + 1) as u64);
    rng
}

fn check_level(level: u32) -> Result<()> {
    if SYNTH_LEVELS.contains(&level) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "synthesis level must lie in {}..={}, got {level}",
            SYNTH_LEVELS.start(),
            SYNTH_LEVELS.end()
        )))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// Fills every wavelet block `(j1, j2) ∈ [0, J)²` in parallel.
fn fill_wavelet_blocks(
    level: u32,
    normalization: Normalization,
    fill: impl Fn(u32, u32, &mut [f64]) + Sync,
) -> HyperbolicCoeffs {
    let mut coeffs = HyperbolicCoeffs::zeros(level, normalization).expect("level checked");
    let pairs: Vec<ScalePair> = coeffs.pairs().collect();
    let mut blocks: Vec<Vec<f64>> = coeffs.blocks().to_vec();
    blocks
        .par_iter_mut()
        .zip(pairs.par_iter())
        .filter(|(_, p)| p.is_wavelet())
        .for_each(|(block, p)| fill(p.j1 as u32, p.j2 as u32, block));
    coeffs = HyperbolicCoeffs::from_blocks(level, normalization, blocks).expect("shapes preserved");
    coeffs
}

/// L1 coefficients `σ · profile(j1, j2)` with random equiprobable signs on
/// every wavelet block; scaling blocks stay zero.
pub fn synth_prescribed(
    s0: f64,
    alpha: Anisotropy,
    level: u32,
    seed: u64,
    profile: CoefficientProfile,
    filter: &Filter,
) -> Result<Synthesized> {
    positive("s0", s0)?;
    check_level(level)?;
    if let CoefficientProfile::OffDiagonal { delta } = profile {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::Domain(format!(
                "off-diagonal damping must be nonnegative, got {delta}"
            )));
        }
    }
    let coeffs = fill_wavelet_blocks(level, Normalization::L1, |j1, j2, block| {
        let mag = profile.magnitude(s0, alpha, j1, j2);
        let mut rng = block_rng(seed, j1 as i32, j2 as i32);
        for v in block.iter_mut() {
            *v = if rng.random::<bool>() { mag } else { -mag };
        }
    });
    Ok(Synthesized {
        grid: hyperbolic_inverse(&coeffs, filter)?,
        coeffs,
        params: SynthParams::Prescribed {
            s0,
            a: alpha.a1(),
            level,
            seed,
            profile,
        },
        filter: filter.name().to_string(),
        counts: None,
    })
}

/// `C^∞` step equal to 1 below `lo`, 0 above `hi`.
fn smooth_window(d: f64, lo: f64, hi: f64) -> f64 {
    let psi = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let t = (d - lo) / (hi - lo);
    let (a, b) = (psi(1.0 - t), psi(t));
    a / (a + b)
}

/// Signed torus displacement in `[-1/2, 1/2)`.
fn torus_offset(x: f64, x0: f64) -> f64 {
    (x - x0 + 0.5).rem_euclid(1.0) - 0.5
}

/// Window radii `[lo, hi]` for [`synth_cusp`]: the sup-distance at which the
/// window starts to fall and the one from which it is zero.
pub const CUSP_WINDOW: [f64; 2] = [0.25, 0.45];

/// `|x - x0|_α^s0` on the torus, taken at the nearest periodic image of `x0`,
/// so the field is continuous and periodic. With `window = Some([lo, hi])` it
/// is also multiplied by a `C^∞` step of the sup-distance to `x0` that falls
/// from 1 at `lo` to 0 at `hi`, which removes the kinks along the cut locus
/// but adds coarse-scale structure. Sample `(i1, i2)` sits at `(i1, i2) / 2^J`.
pub fn synth_cusp(
    x0: [f64; 2],
    s0: f64,
    alpha: Anisotropy,
    level: u32,
    window: Option<[f64; 2]>,
    filter: &Filter,
) -> Result<Synthesized> {
    check_point(x0)?;
    check_level(level)?;
    let cap = 2.0 * filter.vanishing_moments() as f64;
    if !(s0 > 0.0 && s0 < cap) {
        return Err(Error::Domain(format!(
            "cusp exponent must lie in (0, {cap}), got {s0}"
        )));
    }
    if let Some([lo, hi]) = window {
        if !(0.0 < lo && lo < hi && hi <= 0.5) {
            return Err(Error::Domain(format!(
                "cusp window needs 0 < lo < hi <= 1/2, got [{lo}, {hi}]"
            )));
        }
    }
    let grid = Grid2D::from_fn(level, |x1, x2| {
        let t = [torus_offset(x1, x0[0]), torus_offset(x2, x0[1])];
        let cusp = alpha.norm(t).powf(s0);
        match window {
            Some([lo, hi]) => cusp * smooth_window(t[0].abs().max(t[1].abs()), lo, hi),
            None => cusp,
        }
    })?;
    let coeffs = hyperbolic_forward(&grid, filter, Normalization::L1)?;
    Ok(Synthesized {
        grid,
        coeffs,
        params: SynthParams::Cusp {
            x0,
            s0,
            a: alpha.a1(),
            level,
            window,
        },
        filter: filter.name().to_string(),
        counts: None,
    })
}

/// Two-exponent field: each position of block `(j1, j2)` is independently
/// selected with probability `2^(-2 γ m)` and then carries magnitude
/// `2^(-h1 m)`; the other positions carry `2^(-h2 m)`. Signs are random.
pub fn synth_lacunary(
    h1: f64,
    h2: f64,
    gamma: f64,
    alpha: Anisotropy,
    level: u32,
    seed: u64,
    filter: &Filter,
) -> Result<Synthesized> {
    positive("h1", h1)?;
    if !(h2 > h1 && h2.is_finite()) {
        return Err(Error::Domain(format!("need h1 < h2, got {h1} and {h2}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    check_level(level)?;
    let coeffs = fill_wavelet_blocks(level, Normalization::L1, |j1, j2, block| {
        let m = alpha.scale_index(j1, j2);
        let fraction = 2f64.powf(-2.0 * gamma * m);
        let (rough, smooth) = (2f64.powf(-h1 * m), 2f64.powf(-h2 * m));
        let mut rng = block_rng(seed, j1 as i32, j2 as i32);
        for v in block.iter_mut() {
            let mag = if rng.random::<f64>() < fraction {
                rough
            } else {
                smooth
            };
            *v = if rng.random::<bool>() { mag } else { -mag };
        }
    });
    let counts = lacunary_counts(&coeffs, h1, alpha);
    Ok(Synthesized {
        grid: hyperbolic_inverse(&coeffs, filter)?,
        coeffs,
        params: SynthParams::Lacunary {
            h1,
            h2,
            gamma,
            a: alpha.a1(),
            level,
            seed,
        },
        filter: filter.name().to_string(),
        counts: Some(counts),
    })
}

fn lacunary_counts(coeffs: &HyperbolicCoeffs, h1: f64, alpha: Anisotropy) -> Vec<LacunaryCount> {
    let level = coeffs.level();
    let mut out = Vec::with_capacity((level * level) as usize);
    for j1 in 0..level {
        for j2 in 0..level {
            let rough_mag = 2f64.powf(-h1 * alpha.scale_index(j1, j2));
            let block = coeffs.block(j1 as i32, j2 as i32);
            let rough = block.iter().filter(|v| v.abs() == rough_mag).count() as u64;
            out.push(LacunaryCount {
                j1,
                j2,
                rough,
                smooth: block.len() as u64 - rough,
            });
        }
    }
    out
}

/// Gaussian surrogate of a fractional Brownian sheet: L2 coefficients with
/// standard deviation `2^(-j1⁺(H1 + 1/2) - j2⁺(H2 + 1/2))`, scaling blocks
/// included with `j⁺ = max(j, 0)`. Wavelet coefficients of a true sheet are
/// correlated; these are not.
pub fn synth_fbs(h1: f64, h2: f64, level: u32, seed: u64, filter: &Filter) -> Result<Synthesized> {
    for (name, h) in [("H1", h1), ("H2", h2)] {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::Domain(format!("{name} must lie in (0, 1), got {h}")));
        }
    }
    check_level(level)?;
    let template = HyperbolicCoeffs::zeros(level, Normalization::L2)?;
    let pairs: Vec<ScalePair> = template.pairs().collect();
    let blocks: Vec<Vec<f64>> = pairs
        .par_iter()
        .zip(template.blocks().par_iter())
        .map(|(p, b)| {
            let sd =
                2f64.powf(-(p.j1.max(0) as f64) * (h1 + 0.5) - (p.j2.max(0) as f64) * (h2 + 0.5));
            let mut rng = block_rng(seed, p.j1, p.j2);
            (0..b.len())
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    sd * z
                })
                .collect()
        })
        .collect();
    let coeffs = HyperbolicCoeffs::from_blocks(level, Normalization::L2, blocks)?;
    Ok(Synthesized {
        grid: hyperbolic_inverse(&coeffs, filter)?,
        coeffs,
        params: SynthParams::Fbs {
            h1,
            h2,
            level,
            seed,
        },
        filter: filter.name().to_string(),
        counts: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db4() -> Filter {
        Filter::default()
    }

    #[test]
    fn prescribed_is_deterministic() {
        let alpha = Anisotropy::new(0.8).unwrap();
        let a = synth_prescribed(0.6, alpha, 7, 7, CoefficientProfile::default(), &db4()).unwrap();
        let b = synth_prescribed(0.6, alpha, 7, 7, CoefficientProfile::default(), &db4()).unwrap();
        assert_eq!(a.grid, b.grid);
        let c = synth_prescribed(0.6, alpha, 7, 8, CoefficientProfile::default(), &db4()).unwrap();
        assert_ne!(a.grid, c.grid);
    }

    #[test]
    fn prescribed_magnitudes() {
        let alpha = Anisotropy::new(0.8).unwrap();
        for profile in [
            CoefficientProfile::Plain,
            CoefficientProfile::InverseScale,
            CoefficientProfile::OffDiagonal { delta: 1.0 },
        ] {
            let s = synth_prescribed(0.6, alpha, 6, 1, profile, &db4()).unwrap();
            assert_eq!(s.coeffs.normalization(), Normalization::L1);
            for j1 in 0..6u32 {
                for j2 in 0..6u32 {
                    let m = alpha.scale_index(j1, j2);
                    let expected = match profile {
                        CoefficientProfile::Plain => 2f64.powf(-0.6 * m),
                        CoefficientProfile::InverseScale => 2f64.powf(-0.6 * m) / m.max(1.0),
                        CoefficientProfile::OffDiagonal { .. } => {
                            2f64.powf(-0.6 * m - (j1 as f64 / 0.8 - j2 as f64 / 1.2).abs())
                        }
                    };
                    for v in s.coeffs.block(j1 as i32, j2 as i32) {
                        assert!((v.abs() - expected).abs() <= 1e-15 * expected);
                    }
                }
            }
            assert!(s.coeffs.block(-1, -1).iter().all(|&v| v == 0.0));
            assert!(s.coeffs.block(-1, 3).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn grid_reanalyses_to_the_emitted_coefficients() {
        let alpha = Anisotropy::new(1.3).unwrap();
        let s = synth_prescribed(0.5, alpha, 6, 3, CoefficientProfile::Plain, &db4()).unwrap();
        let back = hyperbolic_forward(&s.grid, &db4(), Normalization::L1).unwrap();
        for (x, y) in back
            .blocks()
            .iter()
            .flatten()
            .zip(s.coeffs.blocks().iter().flatten())
        {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn coarse_blocks_do_not_depend_on_level() {
        let alpha = Anisotropy::ISOTROPIC;
        let a = synth_prescribed(0.6, alpha, 6, 5, CoefficientProfile::Plain, &db4()).unwrap();
        let b = synth_prescribed(0.6, alpha, 8, 5, CoefficientProfile::Plain, &db4()).unwrap();
        assert_eq!(a.coeffs.block(3, 4), b.coeffs.block(3, 4));
        let f = synth_fbs(0.3, 0.7, 6, 5, &db4()).unwrap();
        let g = synth_fbs(0.3, 0.7, 7, 5, &db4()).unwrap();
        assert_eq!(f.coeffs.block(-1, 2), g.coeffs.block(-1, 2));
        assert_eq!(f.coeffs.block(5, 5), g.coeffs.block(5, 5));
    }

    #[test]
    fn parameter_domains() {
        let alpha = Anisotropy::ISOTROPIC;
        let f = db4();
        assert!(synth_prescribed(0.0, alpha, 6, 1, CoefficientProfile::Plain, &f).is_err());
        assert!(synth_prescribed(0.5, alpha, 4, 1, CoefficientProfile::Plain, &f).is_err());
        assert!(synth_prescribed(0.5, alpha, 15, 1, CoefficientProfile::Plain, &f).is_err());
        assert!(synth_prescribed(
            0.5,
            alpha,
            6,
            1,
            CoefficientProfile::OffDiagonal { delta: -1.0 },
            &f
        )
        .is_err());
        assert!(synth_cusp([1.0, 0.5], 0.8, alpha, 6, None, &f).is_err());
        assert!(synth_cusp([0.5, 0.5], 8.0, alpha, 6, None, &f).is_err());
        assert!(synth_cusp([0.5, 0.5], 0.8, alpha, 6, Some([0.3, 0.2]), &f).is_err());
        assert!(synth_lacunary(0.9, 0.4, 0.3, alpha, 6, 1, &f).is_err());
        assert!(synth_lacunary(0.4, 0.9, 1.0, alpha, 6, 1, &f).is_err());
        assert!(synth_fbs(1.0, 0.5, 6, 1, &f).is_err());
    }

    #[test]
    fn cusp_values() {
        let alpha = Anisotropy::ISOTROPIC;
        let s = synth_cusp([0.5, 0.5], 1.0, alpha, 6, None, &db4()).unwrap();
        let g = &s.grid;
        assert_eq!(g.get(32, 32), 0.0);
        assert!(g.values().iter().all(|&v| v >= 0.0));
        // Axis points at distance t from the apex.
        for k in 1..=32 {
            let t = k as f64 / 64.0;
            assert!((g.get((32 + k) % 64, 32) - t).abs() < 1e-14);
            assert!((g.get(32, 32 - k) - t).abs() < 1e-14);
        }
        assert!((g.get(0, 0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn windowed_cusp() {
        let alpha = Anisotropy::ISOTROPIC;
        let plain = synth_cusp([0.5, 0.5], 1.0, alpha, 6, None, &db4()).unwrap();
        let s = synth_cusp([0.5, 0.5], 1.0, alpha, 6, Some(CUSP_WINDOW), &db4()).unwrap();
        let g = &s.grid;
        for k in 1..=16 {
            assert_eq!(g.get(32 + k, 32), plain.grid.get(32 + k, 32));
        }
        assert_eq!(g.get(0, 10), 0.0);
        assert_eq!(g.get(61, 61), 0.0);
        assert!(g.get(32 + 20, 32) < plain.grid.get(32 + 20, 32));
    }

    #[test]
    fn cusp_wraps_around_the_torus() {
        let alpha = Anisotropy::new(1.2).unwrap();
        let s = synth_cusp([0.0, 0.0], 0.8, alpha, 6, None, &db4()).unwrap();
        let g = &s.grid;
        assert_eq!(g.get(0, 0), 0.0);
        assert_eq!(g.get(1, 0), g.get(63, 0));
        assert_eq!(g.get(0, 3), g.get(0, 61));
    }

    #[test]
    fn lacunary_counts_partition_blocks() {
        let alpha = Anisotropy::new(0.9).unwrap();
        let s = synth_lacunary(0.4, 0.9, 0.3, alpha, 7, 2, &db4()).unwrap();
        let counts = s.counts.as_ref().unwrap();
        assert_eq!(counts.len(), 49);
        for c in counts {
            let block = s.coeffs.block(c.j1 as i32, c.j2 as i32);
            assert_eq!(c.rough + c.smooth, block.len() as u64);
            let m = alpha.scale_index(c.j1, c.j2);
            let (r, sm) = (2f64.powf(-0.4 * m), 2f64.powf(-0.9 * m));
            assert!(block.iter().all(|v| v.abs() == r || v.abs() == sm));
        }
        assert_eq!(counts[0].rough, 1);
        let fine = counts.iter().find(|c| (c.j1, c.j2) == (6, 6)).unwrap();
        let expected = 4096.0 * 2f64.powf(-2.0 * 0.3 * alpha.scale_index(6, 6));
        assert!((fine.rough as f64 - expected).abs() < 5.0 * expected.sqrt());
    }

    #[test]
    fn fbs_coefficient_spread() {
        let s = synth_fbs(0.3, 0.7, 8, 4, &db4()).unwrap();
        assert_eq!(s.coeffs.normalization(), Normalization::L2);
        let block = s.coeffs.block(7, 6);
        let var = block.iter().map(|v| v * v).sum::<f64>() / block.len() as f64;
        let sd = 2f64.powf(-7.0 * 0.8 - 6.0 * 1.2);
        assert!((var.sqrt() / sd - 1.0).abs() < 0.05);
        assert_eq!(
            s.params,
            SynthParams::Fbs {
                h1: 0.3,
                h2: 0.7,
                level: 8,
                seed: 4
            }
        );
    }
}
