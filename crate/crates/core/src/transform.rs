//! Periodic orthogonal wavelet transforms: the full-depth 1D pyramid and its
//! hyperbolic (tensor-product) extension to the unit torus.
//!
//! The hyperbolic transform runs the complete 1D pyramid along every row and
//! then along every column, so each scale pair `(j1, j2)` gets its own block of
//! `2^max(j1,0) × 2^max(j2,0)` coefficients, `j = -1` denoting the scaling
//! function direction.
//!
//! Coefficients are reported on the unit square: a level-`J` grid is read as
//! the piecewise representation whose orthonormal coefficients are the
//! discrete ones scaled by `2^-J`. In [`Normalization::L2`] mode the block
//! entries are `<f, ψ_{j1,k1} ⊗ ψ_{j2,k2}>` for `L²`-normalised wavelets, so
//! `Σ c² = 2^-2J Σ f²` and a constant field `v` has scaling coefficient `v`.
//! [`Normalization::L1`] multiplies block `(j1, j2)` by
//! `2^((max(j1,0) + max(j2,0)) / 2)`, giving `c = 2^(j1+j2) <f, ψ(2^j1·-k1) ψ(2^j2·-k2)>`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::Filter;
use crate::scales::ScalePair;

/// Largest supported grid level (side `2^15`).
pub const MAX_LEVEL: u32 = 15;
/// Smallest supported grid level.
pub const MIN_LEVEL: u32 = 3;

/// Coefficient normalization convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Normalization {
    L1,
    L2,
}

impl std::fmt::Display for Normalization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Normalization::L1 => write!(f, "L1"),
            Normalization::L2 => write!(f, "L2"),
        }
    }
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Normalization::L1),
            "l2" => Ok(Normalization::L2),
            _ => Err(Error::Domain(format!("unknown normalization '{s}'"))),
        }
    }
}

/// Samples of a function on the `2^J × 2^J` periodic unit square, row-major.
///
/// Sample `(i1, i2)` sits at `x = (i1 / 2^J, i2 / 2^J)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    level: u32,
    values: Vec<f64>,
}

impl Grid2D {
    pub fn new(level: u32, values: Vec<f64>) -> Result<Self> {
        if !(MIN_LEVEL..=MAX_LEVEL).contains(&level) {
            return Err(Error::Domain(format!(
                "grid level must lie in [{MIN_LEVEL}, {MAX_LEVEL}], got {level}"
            )));
        }
        let side = 1usize << level;
        if values.len() != side * side {
            return Err(Error::Shape(format!(
                "level {level} needs {} samples, got {}",
                side * side,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("sample {i} is not finite")));
        }
        Ok(Self { level, values })
    }

    pub fn zeros(level: u32) -> Result<Self> {
        Self::new(level, vec![0.0; 1usize << (2 * level.min(MAX_LEVEL))])
    }

    /// Samples `f(x1, x2)` at the grid points.
    pub fn from_fn(level: u32, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        if !(MIN_LEVEL..=MAX_LEVEL).contains(&level) {
            return Err(Error::Domain(format!("grid level {level} out of range")));
        }
        let side = 1usize << level;
        let h = 1.0 / side as f64;
        let values: Vec<f64> = (0..side * side)
            .into_par_iter()
            .map(|idx| f((idx / side) as f64 * h, (idx % side) as f64 * h))
            .collect();
        Self::new(level, values)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn side(&self) -> usize {
        1 << self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.side() + i2]
    }

    /// Applies `f` to every sample.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.level, self.values.iter().map(|&v| f(v)).collect())
    }

    /// The grid with its two coordinates exchanged.
    pub fn transposed(&self) -> Self {
        let side = self.side();
        Self {
            level: self.level,
            values: transpose(&self.values, side),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Multilevel 1D coefficients: one approximation value and detail blocks of
/// length `2^j` for `j = 0 .. J-1`, orthonormal (`L²`) convention.
#[derive(Debug, Clone, PartialEq)]
pub struct Dwt1d {
    pub approx: f64,
    pub details: Vec<Vec<f64>>,
}

impl Dwt1d {
    pub fn level(&self) -> u32 {
        self.details.len() as u32
    }

    /// Packed layout `[approx, d_0, d_1[0..2], ..., d_{J-1}[..]]`.
    pub fn to_packed(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(1 << self.details.len());
        out.push(self.approx);
        for d in &self.details {
            out.extend_from_slice(d);
        }
        out
    }

    fn from_packed(packed: &[f64]) -> Self {
        let level = packed.len().trailing_zeros();
        let details = (0..level)
            .map(|j| packed[1 << j..1 << (j + 1)].to_vec())
            .collect();
        Self {
            approx: packed[0],
            details,
        }
    }
}

fn check_length(len: usize, filter: &Filter) -> Result<u32> {
    if !len.is_power_of_two() || len < 8 {
        return Err(Error::Shape(format!(
            "signal length must be a power of two >= 8, got {len}"
        )));
    }
    if len < filter.len() {
        return Err(Error::Shape(format!(
            "signal length {len} is shorter than the {}-tap filter",
            filter.len()
        )));
    }
    Ok(len.trailing_zeros())
}

/// One periodic analysis step on `input` (even length): lowpass outputs go to
/// `out[..n/2]`, highpass outputs to `out[n/2..]`.
fn analysis_step(input: &[f64], out: &mut [f64], filter: &Filter) {
    let n = input.len() as i64;
    let half = input.len() / 2;
    let offset = filter.centering_offset() as i64;
    let (h, g) = (filter.lowpass(), filter.highpass());
    for k in 0..half {
        let base = 2 * k as i64 - offset;
        let (mut a, mut d) = (0.0, 0.0);
        for (i, (hi, gi)) in h.iter().zip(g).enumerate() {
            let x = input[(base + i as i64).rem_euclid(n) as usize];
            a += hi * x;
            d += gi * x;
        }
        out[k] = a;
        out[half + k] = d;
    }
}

/// Transpose of [`analysis_step`]: `input[..n/2]` are lowpass and
/// `input[n/2..]` highpass coefficients.
fn synthesis_step(input: &[f64], out: &mut [f64], filter: &Filter) {
    let n = out.len() as i64;
    let half = out.len() / 2;
    let offset = filter.centering_offset() as i64;
    let (h, g) = (filter.lowpass(), filter.highpass());
    out.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..half {
        let base = 2 * k as i64 - offset;
        let (a, d) = (input[k], input[half + k]);
        for (i, (hi, gi)) in h.iter().zip(g).enumerate() {
            out[(base + i as i64).rem_euclid(n) as usize] += hi * a + gi * d;
        }
    }
}

/// Full-depth forward transform in place, producing the packed layout.
fn forward_packed(buf: &mut [f64], scratch: &mut [f64], filter: &Filter) {
    let mut n = buf.len();
    while n >= 2 {
        analysis_step(&buf[..n], &mut scratch[..n], filter);
        buf[..n].copy_from_slice(&scratch[..n]);
        n /= 2;
    }
}

/// Inverse of [`forward_packed`].
fn inverse_packed(buf: &mut [f64], scratch: &mut [f64], filter: &Filter) {
    let mut n = 2;
    while n <= buf.len() {
        synthesis_step(&buf[..n], &mut scratch[..n], filter);
        buf[..n].copy_from_slice(&scratch[..n]);
        n *= 2;
    }
}

/// Periodic full-depth forward transform of a signal of length `2^J`.
pub fn dwt1d_forward(signal: &[f64], filter: &Filter) -> Result<Dwt1d> {
    check_length(signal.len(), filter)?;
    let mut buf = signal.to_vec();
    let mut scratch = vec![0.0; buf.len()];
    forward_packed(&mut buf, &mut scratch, filter);
    Ok(Dwt1d::from_packed(&buf))
}

/// Inverse of [`dwt1d_forward`].
pub fn dwt1d_inverse(coeffs: &Dwt1d, filter: &Filter) -> Result<Vec<f64>> {
    for (j, d) in coeffs.details.iter().enumerate() {
        if d.len() != 1 << j {
            return Err(Error::Shape(format!(
                "detail block {j} has length {}, expected {}",
                d.len(),
                1usize << j
            )));
        }
    }
    let mut buf = coeffs.to_packed();
    check_length(buf.len(), filter)?;
    let mut scratch = vec![0.0; buf.len()];
    inverse_packed(&mut buf, &mut scratch, filter);
    Ok(buf)
}

fn transpose(values: &[f64], side: usize) -> Vec<f64> {
    const TILE: usize = 32;
    let mut out = vec![0.0; values.len()];
    for r0 in (0..side).step_by(TILE) {
        for c0 in (0..side).step_by(TILE) {
            for r in r0..(r0 + TILE).min(side) {
                for c in c0..(c0 + TILE).min(side) {
                    out[c * side + r] = values[r * side + c];
                }
            }
        }
    }
    out
}

fn rows_forward(values: &mut [f64], side: usize, filter: &Filter) {
    values.par_chunks_mut(side).for_each_init(
        || vec![0.0; side],
        |scratch, row| forward_packed(row, scratch, filter),
    );
}

fn rows_inverse(values: &mut [f64], side: usize, filter: &Filter) {
    values.par_chunks_mut(side).for_each_init(
        || vec![0.0; side],
        |scratch, row| inverse_packed(row, scratch, filter),
    );
}

/// Offset of scale `j` (`-1` for the scaling direction) in the packed 1D layout.
fn packed_offset(j: i32) -> usize {
    if j < 0 {
        0
    } else {
        1 << j
    }
}

fn block_len(j: i32) -> usize {
    1 << j.max(0)
}

/// Hyperbolic wavelet coefficients: one block per scale pair
/// `(j1, j2) ∈ {-1, 0, ..., J-1}²`, block `(j1, j2)` holding
/// `2^max(j1,0) × 2^max(j2,0)` entries row-major (`k1` selects the row).
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicCoeffs {
    level: u32,
    normalization: Normalization,
    blocks: Vec<Vec<f64>>,
}

impl HyperbolicCoeffs {
    /// An all-zero container. Levels from 1 are accepted so that small
    /// coefficient sets can be built by hand.
    pub fn zeros(level: u32, normalization: Normalization) -> Result<Self> {
        if !(1..=MAX_LEVEL).contains(&level) {
            return Err(Error::Domain(format!(
                "coefficient level {level} out of range"
            )));
        }
        let dim = level as usize + 1;
        let mut blocks = Vec::with_capacity(dim * dim);
        for j1 in -1..level as i32 {
            for j2 in -1..level as i32 {
                blocks.push(vec![0.0; block_len(j1) * block_len(j2)]);
            }
        }
        Ok(Self {
            level,
            normalization,
            blocks,
        })
    }

    /// Wraps blocks given in lexicographic `(j1, j2)` order starting at `(-1, -1)`.
    pub fn from_blocks(
        level: u32,
        normalization: Normalization,
        blocks: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let template = Self::zeros(level, normalization)?;
        if blocks.len() != template.blocks.len() {
            return Err(Error::Shape(format!(
                "expected {} blocks, got {}",
                template.blocks.len(),
                blocks.len()
            )));
        }
        for (i, (b, t)) in blocks.iter().zip(&template.blocks).enumerate() {
            if b.len() != t.len() {
                return Err(Error::Shape(format!(
                    "block {i} has {} entries, expected {}",
                    b.len(),
                    t.len()
                )));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("block {i} has a non-finite entry")));
            }
        }
        Ok(Self {
            level,
            normalization,
            blocks,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Fails with a normalization-guard error unless the container is in `expected` mode.
    pub fn require(&self, expected: Normalization) -> Result<()> {
        if self.normalization != expected {
            return Err(Error::Normalization {
                expected,
                found: self.normalization,
            });
        }
        Ok(())
    }

    fn index(&self, j1: i32, j2: i32) -> usize {
        let l = self.level as i32;
        assert!(
            (-1..l).contains(&j1) && (-1..l).contains(&j2),
            "scale pair ({j1}, {j2}) outside level {l}"
        );
        (j1 + 1) as usize * (self.level as usize + 1) + (j2 + 1) as usize
    }

    /// Block shape `(rows, columns)` for scale pair `(j1, j2)`.
    pub fn block_shape(j1: i32, j2: i32) -> (usize, usize) {
        (block_len(j1), block_len(j2))
    }

    pub fn block(&self, j1: i32, j2: i32) -> &[f64] {
        &self.blocks[self.index(j1, j2)]
    }

    pub fn block_mut(&mut self, j1: i32, j2: i32) -> &mut [f64] {
        let i = self.index(j1, j2);
        &mut self.blocks[i]
    }

    pub fn get(&self, j1: i32, j2: i32, k1: usize, k2: usize) -> f64 {
        self.block(j1, j2)[k1 * block_len(j2) + k2]
    }

    pub fn set(&mut self, j1: i32, j2: i32, k1: usize, k2: usize, value: f64) {
        let cols = block_len(j2);
        self.block_mut(j1, j2)[k1 * cols + k2] = value;
    }

    /// All scale pairs in lexicographic order from `(-1, -1)`.
    pub fn pairs(&self) -> impl Iterator<Item = ScalePair> {
        let l = self.level as i32;
        (-1..l).flat_map(move |j1| (-1..l).map(move |j2| ScalePair { j1, j2 }))
    }

    /// Blocks in the order of [`Self::pairs`].
    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        1 << (2 * self.level)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sum of squared entries over every block.
    pub fn energy(&self) -> f64 {
        self.blocks.iter().flatten().map(|v| v * v).sum()
    }

    /// Converts to `target` normalization (identity when already there).
    pub fn renormalize(&self, target: Normalization) -> Self {
        if target == self.normalization {
            return self.clone();
        }
        let mut out = self.clone();
        out.normalization = target;
        for ScalePair { j1, j2 } in self.pairs() {
            let exponent = (j1.max(0) + j2.max(0)) as f64 / 2.0;
            let factor = 2f64.powf(exponent);
            let block = out.block_mut(j1, j2);
            match target {
                Normalization::L1 => block.iter_mut().for_each(|v| *v *= factor),
                Normalization::L2 => block.iter_mut().for_each(|v| *v /= factor),
            }
        }
        out
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.blocks.iter_mut().flatten().for_each(|v| *v *= factor);
        out
    }

    fn from_packed(packed: &[f64], level: u32, normalization: Normalization) -> Self {
        let side = 1usize << level;
        let mut out = Self::zeros(level, normalization).expect("valid level");
        for ScalePair { j1, j2 } in out.pairs().collect::<Vec<_>>() {
            let (r0, c0) = (packed_offset(j1), packed_offset(j2));
            let (rows, cols) = Self::block_shape(j1, j2);
            let block = out.block_mut(j1, j2);
            for r in 0..rows {
                let src = (r0 + r) * side + c0;
                block[r * cols..(r + 1) * cols].copy_from_slice(&packed[src..src + cols]);
            }
        }
        out
    }

    fn to_packed(&self) -> Vec<f64> {
        let side = 1usize << self.level;
        let mut packed = vec![0.0; side * side];
        for ScalePair { j1, j2 } in self.pairs() {
            let (r0, c0) = (packed_offset(j1), packed_offset(j2));
            let (rows, cols) = Self::block_shape(j1, j2);
            let block = self.block(j1, j2);
            for r in 0..rows {
                let dst = (r0 + r) * side + c0;
                packed[dst..dst + cols].copy_from_slice(&block[r * cols..(r + 1) * cols]);
            }
        }
        packed
    }
}

/// Hyperbolic forward transform: rows, then columns, then regrouping by scale pair.
pub fn hyperbolic_forward(
    grid: &Grid2D,
    filter: &Filter,
    norm: Normalization,
) -> Result<HyperbolicCoeffs> {
    let side = grid.side();
    check_length(side, filter)?;
    let mut values = grid.values().to_vec();
    rows_forward(&mut values, side, filter);
    let mut cols = transpose(&values, side);
    rows_forward(&mut cols, side, filter);
    let mut packed = transpose(&cols, side);
    let unit = 2f64.powi(-(grid.level() as i32));
    packed.par_iter_mut().for_each(|v| *v *= unit);
    let coeffs = HyperbolicCoeffs::from_packed(&packed, grid.level(), Normalization::L2);
    Ok(coeffs.renormalize(norm))
}

/// Inverse of [`hyperbolic_forward`] (normalization is undone first).
pub fn hyperbolic_inverse(coeffs: &HyperbolicCoeffs, filter: &Filter) -> Result<Grid2D> {
    let level = coeffs.level();
    if level < MIN_LEVEL {
        return Err(Error::Shape(format!(
            "cannot synthesize a level-{level} grid"
        )));
    }
    let side = 1usize << level;
    check_length(side, filter)?;
    let l2 = coeffs.renormalize(Normalization::L2);
    let mut packed = l2.to_packed();
    let unit = 2f64.powi(level as i32);
    packed.par_iter_mut().for_each(|v| *v *= unit);
    let mut cols = transpose(&packed, side);
    rows_inverse(&mut cols, side, filter);
    let mut values = transpose(&cols, side);
    rows_inverse(&mut values, side, filter);
    Grid2D::new(level, values)
}
