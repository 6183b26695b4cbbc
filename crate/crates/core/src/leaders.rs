//! Hyperbolic wavelet leaders.
//!
//! The leader of a hyperbolic cube `λ` is the largest coefficient magnitude
//! over every hyperbolic cube contained in `λ`, `λ` itself included. A proper
//! sub-cube refines at least one direction, so it lies inside one of the two
//! `j1`-children or one of the two `j2`-children of `λ`, and the leaders obey
//!
//! ```text
//! d(j1,j2,k1,k2) = max(|c(j1,j2,k1,k2)|,
//!                      d(j1+1,j2,2k1,k2), d(j1+1,j2,2k1+1,k2),
//!                      d(j1,j2+1,k1,2k2), d(j1,j2+1,k1,2k2+1)).
//! ```
//!
//! Children beyond the finest scale `J-1` do not exist, so leaders close to
//! the finest scales see truncated descendant sets.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scales::HyperbolicCube;
use crate::transform::{HyperbolicCoeffs, Normalization};

/// Leaders below this value count as structural zeros.
pub const ZERO_THRESHOLD: f64 = 1e-300;

/// Leaders `d(j1, j2, k1, k2)` for `(j1, j2) ∈ [0, J)²`, block `(j1, j2)`
/// stored row-major with shape `2^j1 × 2^j2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderPyramid {
    level: u32,
    blocks: Vec<Vec<f64>>,
}

impl LeaderPyramid {
    /// Wraps explicit blocks given in lexicographic `(j1, j2)` order.
    pub fn from_blocks(level: u32, blocks: Vec<Vec<f64>>) -> Result<Self> {
        let dim = level as usize;
        if blocks.len() != dim * dim {
            return Err(Error::Shape(format!(
                "level {level} needs {} leader blocks, got {}",
                dim * dim,
                blocks.len()
            )));
        }
        for (i, b) in blocks.iter().enumerate() {
            let (j1, j2) = (i / dim, i % dim);
            if b.len() != 1 << (j1 + j2) {
                return Err(Error::Shape(format!(
                    "leader block ({j1}, {j2}) has {} entries",
                    b.len()
                )));
            }
            if b.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Domain(format!(
                    "leader block ({j1}, {j2}) has a negative or non-finite entry"
                )));
            }
        }
        Ok(Self { level, blocks })
    }

    /// The coefficient magnitudes `|c|` of the wavelet blocks, without taking
    /// suprema over sub-cubes.
    pub fn from_magnitudes(coeffs: &HyperbolicCoeffs) -> Result<Self> {
        coeffs.require(Normalization::L1)?;
        let level = coeffs.level();
        let blocks = (0..level as i32)
            .flat_map(|j1| (0..level as i32).map(move |j2| (j1, j2)))
            .map(|(j1, j2)| coeffs.block(j1, j2).iter().map(|v| v.abs()).collect())
            .collect();
        Ok(Self { level, blocks })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    fn index(&self, j1: u32, j2: u32) -> usize {
        assert!(
            j1 < self.level && j2 < self.level,
            "scale ({j1}, {j2}) outside level {}",
            self.level
        );
        j1 as usize * self.level as usize + j2 as usize
    }

    pub fn block(&self, j1: u32, j2: u32) -> &[f64] {
        &self.blocks[self.index(j1, j2)]
    }

    pub fn get(&self, j1: u32, j2: u32, k1: usize, k2: usize) -> f64 {
        self.block(j1, j2)[(k1 << j2) + k2]
    }

    pub fn at(&self, cube: &HyperbolicCube) -> f64 {
        self.get(cube.j1, cube.j2, cube.k1, cube.k2)
    }

    /// Every leader multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            level: self.level,
            blocks: self
                .blocks
                .iter()
                .map(|b| b.iter().map(|v| v * factor).collect())
                .collect(),
        }
    }

    /// Local leader `d_{j1,j2}(x0)`: the largest leader among the nine cubes
    /// of scale `(j1, j2)` around the cube containing `x0`, positions wrapped
    /// on the torus.
    pub fn local_leader(&self, x0: [f64; 2], j1: u32, j2: u32) -> Result<f64> {
        check_point(x0)?;
        if j1 >= self.level || j2 >= self.level {
            return Err(Error::Domain(format!(
                "scale ({j1}, {j2}) outside level {}",
                self.level
            )));
        }
        let (n1, n2) = (1i64 << j1, 1i64 << j2);
        let c1 = (x0[0] * n1 as f64).floor() as i64;
        let c2 = (x0[1] * n2 as f64).floor() as i64;
        let mut best = 0.0f64;
        for u in -1..=1 {
            for v in -1..=1 {
                let k1 = (c1 + u).rem_euclid(n1) as usize;
                let k2 = (c2 + v).rem_euclid(n2) as usize;
                best = best.max(self.get(j1, j2, k1, k2));
            }
        }
        Ok(best)
    }
}

/// Rejects points outside `[0, 1)²`.
pub(crate) fn check_point(x0: [f64; 2]) -> Result<()> {
    if x0.iter().all(|v| (0.0..1.0).contains(v)) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "point ({}, {}) lies outside [0, 1)^2",
            x0[0], x0[1]
        )))
    }
}

/// Computes every hyperbolic leader of an `L1`-normalised coefficient set.
///
/// Anti-diagonals `j1 + j2 = t` are processed from the finest down; blocks on
/// one anti-diagonal only read the previous one and run in parallel.
pub fn leader_pyramid(coeffs: &HyperbolicCoeffs) -> Result<LeaderPyramid> {
    coeffs.require(Normalization::L1)?;
    let level = coeffs.level();
    let dim = level as usize;
    let mut blocks: Vec<Vec<f64>> = vec![Vec::new(); dim * dim];
    for t in (0..=2 * (dim - 1)).rev() {
        let lo = t.saturating_sub(dim - 1);
        let hi = t.min(dim - 1);
        let done = &blocks;
        let fresh: Vec<(usize, Vec<f64>)> = (lo..=hi)
            .into_par_iter()
            .map(|j1| {
                let j2 = t - j1;
                let own = coeffs.block(j1 as i32, j2 as i32);
                let cols = 1usize << j2;
                let finer1 = (j1 + 1 < dim).then(|| &done[(j1 + 1) * dim + j2]);
                let finer2 = (j2 + 1 < dim).then(|| &done[j1 * dim + j2 + 1]);
                let block = (0..own.len())
                    .map(|idx| {
                        let (k1, k2) = (idx / cols, idx % cols);
                        let mut d = own[idx].abs();
                        if let Some(f) = finer1 {
                            d = d
                                .max(f[(2 * k1) * cols + k2])
                                .max(f[(2 * k1 + 1) * cols + k2]);
                        }
                        if let Some(f) = finer2 {
                            let c2 = 2 * cols;
                            d = d.max(f[k1 * c2 + 2 * k2]).max(f[k1 * c2 + 2 * k2 + 1]);
                        }
                        d
                    })
                    .collect();
                (j1 * dim + j2, block)
            })
            .collect();
        for (i, b) in fresh {
            blocks[i] = b;
        }
    }
    Ok(LeaderPyramid { level, blocks })
}
