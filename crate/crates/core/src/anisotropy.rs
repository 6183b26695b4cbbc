//! Admissible anisotropies and the quantities derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `a1 + a2 = 2` for pairs that arrive from parsed text.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// An admissible anisotropy `α = (a1, a2)` with `a1, a2 > 0` and `a1 + a2 = 2`.
///
/// `(1, 1)` is the isotropic case. A larger `a_i` means the field is analysed
/// with slower dilation along axis `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anisotropy {
    a1: f64,
    a2: f64,
}

impl Anisotropy {
    pub const ISOTROPIC: Anisotropy = Anisotropy { a1: 1.0, a2: 1.0 };

    /// Builds `(a, 2 - a)`; `a` must lie in the open interval `(0, 2)`.
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 2.0) {
            return Err(Error::Domain(format!(
                "anisotropy parameter must lie in (0, 2), got {a}"
            )));
        }
        Ok(Self { a1: a, a2: 2.0 - a })
    }

    /// Builds an anisotropy from both components, checking admissibility.
    pub fn from_pair(a1: f64, a2: f64) -> Result<Self> {
        if !(a1 > 0.0 && a2 > 0.0) || (a1 + a2 - 2.0).abs() > SUM_TOLERANCE {
            return Err(Error::Domain(format!(
                "({a1}, {a2}) is not an admissible anisotropy"
            )));
        }
        Ok(Self { a1, a2 })
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    /// Component along axis 0 (`x1`) or 1 (`x2`).
    pub fn component(&self, axis: usize) -> f64 {
        match axis {
            0 => self.a1,
            1 => self.a2,
            _ => panic!("axis {axis} out of range"),
        }
    }

    /// The anisotropy with its two axes exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            a1: self.a2,
            a2: self.a1,
        }
    }

    /// The α-homogeneous norm `|t1|^(1/a1) + |t2|^(1/a2)`.
    pub fn norm(&self, t: [f64; 2]) -> f64 {
        t[0].abs().powf(1.0 / self.a1) + t[1].abs().powf(1.0 / self.a2)
    }

    /// Scale index `m(j1, j2; α) = max(j1 / a1, j2 / a2)`.
    pub fn scale_index(&self, j1: u32, j2: u32) -> f64 {
        (j1 as f64 / self.a1).max(j2 as f64 / self.a2)
    }
}

impl Default for Anisotropy {
    fn default() -> Self {
        Self::ISOTROPIC
    }
}

impl std::fmt::Display for Anisotropy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.a1, self.a2)
    }
}
