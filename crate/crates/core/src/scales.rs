//! Scale pairs, hyperbolic dyadic cubes and the `Γ_j(α)` index sets.
//!
//! `Γ_j(α)` collects the scale pairs `(j1, j2)` that behave like the `j`-th
//! anisotropic Littlewood–Paley shell. It is the union of three boxes:
//!
//! ```text
//! HL: [(j-1)a1]-1 <= j1 <= [j a1]+1   and  0 <= j2 <= [(j-1)a2]-1
//! LH: 0 <= j1 <= [(j-1)a1]-1          and  [(j-1)a2]-1 <= j2 <= [j a2]+1
//! HH: [(j-1)a1]-1 <= j1 <= [j a1]+1   and  [(j-1)a2]-1 <= j2 <= [j a2]+1
//! ```
//!
//! Lower bounds below zero are clamped to zero. Consecutive sets overlap and
//! the overlap is kept: a pair may belong to several `Γ_j`.

use serde::{Deserialize, Serialize};

use crate::anisotropy::Anisotropy;
use crate::error::{Error, Result};

/// Absorbs representation error in products such as `5 * 0.8` before taking
/// the integer part.
const FLOOR_SLACK: f64 = 1e-9;

/// Integer part of a product that is known to be nonnegative up to rounding.
fn integer_part(x: f64) -> i64 {
    (x + FLOOR_SLACK).floor() as i64
}

/// A scale pair `(j1, j2)`; `-1` marks the scaling-function direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScalePair {
    pub j1: i32,
    pub j2: i32,
}

impl ScalePair {
    pub fn new(j1: i32, j2: i32) -> Result<Self> {
        if j1 < -1 || j2 < -1 {
            return Err(Error::Domain(format!("invalid scale pair ({j1}, {j2})")));
        }
        Ok(Self { j1, j2 })
    }

    /// True when both directions are wavelet (not scaling-function) directions.
    pub fn is_wavelet(&self) -> bool {
        self.j1 >= 0 && self.j2 >= 0
    }
}

/// The hyperbolic dyadic cube `[k1 2^-j1, (k1+1) 2^-j1) × [k2 2^-j2, (k2+1) 2^-j2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HyperbolicCube {
    pub j1: u32,
    pub j2: u32,
    pub k1: usize,
    pub k2: usize,
}

impl HyperbolicCube {
    pub fn new(j1: u32, j2: u32, k1: usize, k2: usize) -> Result<Self> {
        if k1 >= 1usize << j1 || k2 >= 1usize << j2 {
            return Err(Error::Domain(format!(
                "cube position ({k1}, {k2}) out of range at scale ({j1}, {j2})"
            )));
        }
        Ok(Self { j1, j2, k1, k2 })
    }

    /// Set inclusion `other ⊂ self` (equality included).
    pub fn contains(&self, other: &HyperbolicCube) -> bool {
        other.j1 >= self.j1
            && other.j2 >= self.j2
            && (other.k1 >> (other.j1 - self.j1)) == self.k1
            && (other.k2 >> (other.j2 - self.j2)) == self.k2
    }
}

/// An inclusive range of shell indices `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JRange {
    pub lo: u32,
    pub hi: u32,
}

impl JRange {
    pub fn new(lo: u32, hi: u32) -> Result<Self> {
        if lo == 0 || hi < lo {
            return Err(Error::Domain(format!("invalid j range {lo}:{hi}")));
        }
        Ok(Self { lo, hi })
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> {
        self.lo..=self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// The integer bounds of the three boxes making up `Γ_j(α)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GammaBounds {
    /// Clamped lower bound `max([(j-1) a_i] - 1, 0)` of the high band, per axis.
    pub lower: [i64; 2],
    /// Upper bound `[j a_i] + 1` of the high band, per axis.
    pub upper: [i64; 2],
    /// Upper bound `[(j-1) a_i] - 1` of the low strip, per axis (negative when empty).
    pub strip: [i64; 2],
}

impl GammaBounds {
    pub fn new(j: u32, alpha: Anisotropy) -> Self {
        let mut lower = [0; 2];
        let mut upper = [0; 2];
        let mut strip = [0; 2];
        for axis in 0..2 {
            let a = alpha.component(axis);
            let prev = integer_part((j as f64 - 1.0) * a);
            strip[axis] = prev - 1;
            lower[axis] = (prev - 1).max(0);
            upper[axis] = integer_part(j as f64 * a) + 1;
        }
        Self {
            lower,
            upper,
            strip,
        }
    }

    fn in_band(&self, axis: usize, v: i64) -> bool {
        self.lower[axis] <= v && v <= self.upper[axis]
    }

    fn in_strip(&self, axis: usize, v: i64) -> bool {
        0 <= v && v <= self.strip[axis]
    }

    pub fn in_hl(&self, j1: u32, j2: u32) -> bool {
        self.in_band(0, j1 as i64) && self.in_strip(1, j2 as i64)
    }

    pub fn in_lh(&self, j1: u32, j2: u32) -> bool {
        self.in_strip(0, j1 as i64) && self.in_band(1, j2 as i64)
    }

    pub fn in_hh(&self, j1: u32, j2: u32) -> bool {
        self.in_band(0, j1 as i64) && self.in_band(1, j2 as i64)
    }

    pub fn contains(&self, j1: u32, j2: u32) -> bool {
        self.in_hl(j1, j2) || self.in_lh(j1, j2) || self.in_hh(j1, j2)
    }

    /// Largest index along each axis that any pair of the set can reach.
    pub fn max_index(&self) -> [i64; 2] {
        [self.upper[0], self.upper[1]]
    }
}

/// `Γ_j(α)` together with its three constituent parts, pairs sorted lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSet {
    pub j: u32,
    pub alpha: Anisotropy,
    pub hl: Vec<(u32, u32)>,
    pub lh: Vec<(u32, u32)>,
    pub hh: Vec<(u32, u32)>,
    pub pairs: Vec<(u32, u32)>,
}

impl GammaSet {
    pub fn contains(&self, j1: u32, j2: u32) -> bool {
        self.pairs.binary_search(&(j1, j2)).is_ok()
    }

    /// Pairs whose indices are both below `level` (the scales present in a level-`level` grid).
    pub fn available(&self, level: u32) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.pairs
            .iter()
            .copied()
            .filter(move |&(j1, j2)| j1 < level && j2 < level)
    }

    /// True when some pair of the set lies beyond the finest scale `level - 1`.
    pub fn is_clipped(&self, level: u32) -> bool {
        self.pairs
            .iter()
            .any(|&(j1, j2)| j1 >= level || j2 >= level)
    }
}

/// Enumerates `Γ_j(α)`; `j` must be at least 1.
pub fn gamma_set(j: u32, alpha: Anisotropy) -> Result<GammaSet> {
    if j == 0 {
        return Err(Error::Domain("Γ_j is defined for j >= 1".into()));
    }
    let b = GammaBounds::new(j, alpha);
    let [m1, m2] = b.max_index();
    let mut set = GammaSet {
        j,
        alpha,
        hl: Vec::new(),
        lh: Vec::new(),
        hh: Vec::new(),
        pairs: Vec::new(),
    };
    for j1 in 0..=m1.max(0) as u32 {
        for j2 in 0..=m2.max(0) as u32 {
            let (hl, lh, hh) = (b.in_hl(j1, j2), b.in_lh(j1, j2), b.in_hh(j1, j2));
            if hl {
                set.hl.push((j1, j2));
            }
            if lh {
                set.lh.push((j1, j2));
            }
            if hh {
                set.hh.push((j1, j2));
            }
            if hl || lh || hh {
                set.pairs.push((j1, j2));
            }
        }
    }
    Ok(set)
}

/// All `j` in `[1, j_max]` with `(j1, j2) ∈ Γ_j(α)`, in increasing order.
pub fn gamma_memberships(j1: u32, j2: u32, alpha: Anisotropy, j_max: u32) -> Vec<u32> {
    (1..=j_max)
        .filter(|&j| GammaBounds::new(j, alpha).contains(j1, j2))
        .collect()
}

/// Largest `j` whose whole `Γ_j(α)` fits in a level-`level` grid, i.e. `[j a_i] + 1 <= level - 1`.
pub fn largest_unclipped(level: u32, alpha: Anisotropy) -> Option<u32> {
    let mut best = None;
    let mut j = 1;
    loop {
        let [m1, m2] = GammaBounds::new(j, alpha).max_index();
        if m1 > level as i64 - 1 || m2 > level as i64 - 1 {
            return best;
        }
        best = Some(j);
        j += 1;
    }
}

/// Default shell range for coefficient-based statistics: `3..=largest_unclipped`.
pub fn default_coefficient_range(level: u32, alpha: Anisotropy) -> Result<JRange> {
    let hi = largest_unclipped(level, alpha)
        .ok_or_else(|| Error::Degenerate(format!("no unclipped shell at level {level}")))?;
    JRange::new(3, hi).map_err(|_| {
        Error::Degenerate(format!(
            "level {level} is too shallow for anisotropy {alpha} (largest unclipped shell {hi})"
        ))
    })
}

/// Default shell range for leader-based statistics: the two finest unclipped shells are
/// dropped because leaders there see truncated descendant sets.
pub fn default_leader_range(level: u32, alpha: Anisotropy) -> Result<JRange> {
    let hi = largest_unclipped(level, alpha)
        .and_then(|h| h.checked_sub(2))
        .ok_or_else(|| Error::Degenerate(format!("no unclipped shell at level {level}")))?;
    JRange::new(3, hi).map_err(|_| {
        Error::Degenerate(format!(
            "level {level} is too shallow for anisotropy {alpha} (leader range ends at {hi})"
        ))
    })
}
