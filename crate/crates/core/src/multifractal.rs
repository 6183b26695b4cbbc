//! Hyperbolic structure functions, scaling exponents and Legendre spectra.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anisotropy::Anisotropy;
use crate::error::{Error, Result};
use crate::leaders::{LeaderPyramid, ZERO_THRESHOLD};
use crate::regression::{fit_line, LinearFit};
use crate::scales::{default_leader_range, gamma_set, JRange};

/// Smallest `|p|` placed next to zero in a moment grid.
pub const P_NEAR_ZERO: f64 = 1.0 / 64.0;

/// Fraction of excluded positions above which a shell is flagged sparse.
pub const SPARSE_FRACTION: f64 = 0.25;

/// Minimum number of usable shells for a scaling fit.
pub const MIN_SCALES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleFlag {
    Complete,
    /// `Γ_j(α)` reaches past the finest available scale.
    Clipped,
    /// More than a quarter of the leaders are structural zeros.
    Sparse,
}

/// One value `S(j, p, α)` with its bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructurePoint {
    pub j: u32,
    pub p: f64,
    pub value: f64,
    /// Leaders that entered the sum.
    pub count: u64,
    /// Leaders below the zero threshold.
    pub zeros: u64,
    pub flag: ScaleFlag,
}

impl StructurePoint {
    /// Whether the point may enter a regression.
    pub fn usable(&self) -> bool {
        self.flag == ScaleFlag::Complete
            && self.count > 0
            && self.value > 0.0
            && self.value.is_finite()
    }
}

/// Builds a moment grid from `lo` to `hi` in steps of `step`. A grid point
/// at zero is replaced by `±1/64`.
pub fn moment_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && lo <= hi && lo.is_finite() && hi.is_finite()) {
        return Err(Error::Domain(format!("bad moment grid {lo}:{hi}:{step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let p = lo + i as f64 * step;
        if p.abs() < step * 1e-9 {
            out.extend([-P_NEAR_ZERO, P_NEAR_ZERO]);
        } else {
            out.push(p);
        }
    }
    Ok(out)
}

/// Evenly spaced grid of `n` points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::Domain(format!("bad grid {lo}:{hi}:{n}")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}

fn check_p(p: f64) -> Result<()> {
    if p == 0.0 || !p.is_finite() {
        return Err(Error::Domain(format!(
            "moment order must be finite and nonzero, got {p}"
        )));
    }
    Ok(())
}

/// `S(j, p, α) = 2^(-2j) Σ_{(j1,j2) ∈ Γ_j(α)} Σ_k d^p`, summed over the pairs
/// present in the pyramid. For `p < 0` structural zeros are left out of the sum.
pub fn structure_function(
    pyramid: &LeaderPyramid,
    p: f64,
    alpha: Anisotropy,
    j: u32,
) -> Result<StructurePoint> {
    check_p(p)?;
    let gamma = gamma_set(j, alpha)?;
    let level = pyramid.level();
    let mut moments = BlockMoment::default();
    for (j1, j2) in gamma.available(level) {
        moments.add(&BlockMoment::of(pyramid.block(j1, j2), &[p])[0]);
    }
    Ok(moments.point(j, p, gamma.is_clipped(level)))
}

/// Sum of `d^p` over one block (or a union of blocks) for a single `p`.
#[derive(Debug, Clone, Copy, Default)]
struct BlockMoment {
    sum: f64,
    positions: u64,
    zeros: u64,
}

impl BlockMoment {
    fn of(block: &[f64], p_grid: &[f64]) -> Vec<Self> {
        let zeros = block.iter().filter(|&&d| d < ZERO_THRESHOLD).count() as u64;
        p_grid
            .iter()
            .map(|&p| {
                let sum = if p < 0.0 {
                    block
                        .iter()
                        .filter(|&&d| d >= ZERO_THRESHOLD)
                        .map(|d| d.powf(p))
                        .sum()
                } else {
                    block.iter().map(|d| d.powf(p)).sum()
                };
                Self {
                    sum,
                    positions: block.len() as u64,
                    zeros,
                }
            })
            .collect()
    }

    fn add(&mut self, other: &Self) {
        self.sum += other.sum;
        self.positions += other.positions;
        self.zeros += other.zeros;
    }

    fn point(&self, j: u32, p: f64, clipped: bool) -> StructurePoint {
        let count = if p < 0.0 {
            self.positions - self.zeros
        } else {
            self.positions
        };
        let flag = if clipped {
            ScaleFlag::Clipped
        } else if self.positions == 0 || self.zeros as f64 > SPARSE_FRACTION * self.positions as f64
        {
            ScaleFlag::Sparse
        } else {
            ScaleFlag::Complete
        };
        StructurePoint {
            j,
            p,
            value: 2f64.powi(-2 * j as i32) * self.sum,
            count,
            zeros: self.zeros,
            flag,
        }
    }
}

/// Per-block moment sums for a whole pyramid and a fixed moment grid. They do
/// not depend on the anisotropy, so one table serves a full anisotropy sweep.
#[derive(Debug, Clone)]
pub struct MomentTable {
    level: u32,
    p_grid: Vec<f64>,
    blocks: Vec<Vec<BlockMoment>>,
}

impl MomentTable {
    pub fn new(pyramid: &LeaderPyramid, p_grid: &[f64]) -> Result<Self> {
        if p_grid.is_empty() {
            return Err(Error::Domain("empty moment grid".into()));
        }
        p_grid.iter().try_for_each(|&p| check_p(p))?;
        let level = pyramid.level();
        let pairs: Vec<(u32, u32)> = (0..level)
            .flat_map(|a| (0..level).map(move |b| (a, b)))
            .collect();
        let blocks = pairs
            .par_iter()
            .map(|&(j1, j2)| BlockMoment::of(pyramid.block(j1, j2), p_grid))
            .collect();
        Ok(Self {
            level,
            p_grid: p_grid.to_vec(),
            blocks,
        })
    }

    pub fn p_grid(&self) -> &[f64] {
        &self.p_grid
    }

    /// Structure table over `j_range` for one anisotropy.
    pub fn table(&self, alpha: Anisotropy, j_range: JRange) -> Result<StructureTable> {
        let mut points = vec![Vec::with_capacity(j_range.len()); self.p_grid.len()];
        for j in j_range.iter() {
            let gamma = gamma_set(j, alpha)?;
            let clipped = gamma.is_clipped(self.level);
            let mut acc = vec![BlockMoment::default(); self.p_grid.len()];
            for (j1, j2) in gamma.available(self.level) {
                let block = &self.blocks[(j1 * self.level + j2) as usize];
                acc.iter_mut().zip(block).for_each(|(a, b)| a.add(b));
            }
            for (i, &p) in self.p_grid.iter().enumerate() {
                points[i].push(acc[i].point(j, p, clipped));
            }
        }
        Ok(StructureTable {
            alpha,
            p_grid: self.p_grid.clone(),
            j_range,
            points,
        })
    }
}

/// `S(j, p, α)` over a moment grid and a shell range; `points[i]` holds the
/// shells for `p_grid[i]` in increasing `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureTable {
    pub alpha: Anisotropy,
    pub p_grid: Vec<f64>,
    pub j_range: JRange,
    pub points: Vec<Vec<StructurePoint>>,
}

impl StructureTable {
    pub fn new(
        pyramid: &LeaderPyramid,
        p_grid: &[f64],
        alpha: Anisotropy,
        j_range: JRange,
    ) -> Result<Self> {
        MomentTable::new(pyramid, p_grid)?.table(alpha, j_range)
    }

    /// Shell flag, shared by every moment order.
    pub fn flag(&self, j: u32) -> Option<ScaleFlag> {
        self.points
            .first()?
            .iter()
            .find(|pt| pt.j == j)
            .map(|pt| pt.flag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingOptions {
    /// Regress `log2(S 2^(2j) / count)`, the log of the mean of `d^p`, so
    /// the growth of `|Γ_j|` with `j` does not bias the slope.
    pub count_correction: bool,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            count_correction: true,
        }
    }
}

/// `ω(p, α)` for each moment order; `None` where fewer than three shells were usable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingExponents {
    pub alpha: Anisotropy,
    pub p_grid: Vec<f64>,
    pub j_range: JRange,
    pub omega: Vec<Option<f64>>,
    pub fits: Vec<Option<LinearFit>>,
    pub options: ScalingOptions,
}

impl ScalingExponents {
    pub fn fit_quality(&self) -> Vec<Option<f64>> {
        self.fits.iter().map(|f| f.map(|f| f.r_squared)).collect()
    }

    /// `(p, ω(p))` for the defined orders.
    pub fn defined(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.p_grid
            .iter()
            .zip(&self.omega)
            .filter_map(|(&p, w)| w.map(|w| (p, w)))
    }

    pub fn omega_at(&self, p: f64) -> Option<f64> {
        self.p_grid
            .iter()
            .position(|&q| q == p)
            .and_then(|i| self.omega[i])
    }
}

impl StructureTable {
    /// Regression of the structure functions against `j`, one fit per order.
    pub fn exponents(&self, options: ScalingOptions) -> Result<ScalingExponents> {
        let mut omega = Vec::with_capacity(self.p_grid.len());
        let mut fits = Vec::with_capacity(self.p_grid.len());
        for row in &self.points {
            let (x, y): (Vec<f64>, Vec<f64>) = row
                .iter()
                .filter(|pt| pt.usable())
                .map(|pt| {
                    let mut y = pt.value.log2();
                    if options.count_correction {
                        y += 2.0 * pt.j as f64 - (pt.count as f64).log2();
                    }
                    (pt.j as f64, y)
                })
                .unzip();
            if x.len() < MIN_SCALES {
                omega.push(None);
                fits.push(None);
                continue;
            }
            let fit = fit_line(&x, &y)?;
            omega.push(Some(-fit.slope));
            fits.push(Some(fit));
        }
        if omega.iter().all(Option::is_none) {
            return Err(Error::Degenerate(format!(
                "fewer than {MIN_SCALES} usable shells in {}..={} for anisotropy {}",
                self.j_range.lo, self.j_range.hi, self.alpha
            )));
        }
        Ok(ScalingExponents {
            alpha: self.alpha,
            p_grid: self.p_grid.clone(),
            j_range: self.j_range,
            omega,
            fits,
            options,
        })
    }
}

/// `ω(p, α)` as minus the least-squares slope of the structure functions over `j_range`.
pub fn scaling_exponents(
    pyramid: &LeaderPyramid,
    p_grid: &[f64],
    alpha: Anisotropy,
    j_range: JRange,
    options: ScalingOptions,
) -> Result<ScalingExponents> {
    StructureTable::new(pyramid, p_grid, alpha, j_range)?.exponents(options)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegendreValue {
    pub h: f64,
    pub value: f64,
    /// The order attaining the minimum.
    pub p: f64,
    /// Negative values mean "no points with this exponent".
    pub below_zero: bool,
}

/// `L(H) = min_p (H p - ω(p) + 2)` over the defined orders.
pub fn legendre_spectrum(
    exponents: &ScalingExponents,
    h_grid: &[f64],
) -> Result<Vec<LegendreValue>> {
    let defined: Vec<(f64, f64)> = exponents.defined().collect();
    if defined.is_empty() {
        return Err(Error::Degenerate("no scaling exponent is defined".into()));
    }
    Ok(h_grid
        .iter()
        .map(|&h| {
            let (p, value) = defined
                .iter()
                .map(|&(p, w)| (p, h * p - w + 2.0))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty");
            LegendreValue {
                h,
                value,
                p,
                below_zero: value < 0.0,
            }
        })
        .collect())
}

/// Spectrum for one anisotropy. `error` is set, and the other fields are empty,
/// when the estimation failed for this column only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumColumn {
    pub a: f64,
    pub j_range: Option<JRange>,
    pub exponents: Option<ScalingExponents>,
    pub legendre: Vec<LegendreValue>,
    pub error: Option<String>,
}

impl SpectrumColumn {
    /// `(H, L)` at the maximum of the spectrum.
    pub fn argmax(&self) -> Option<(f64, f64)> {
        self.legendre
            .iter()
            .max_by(|a, b| a.value.total_cmp(&b.value))
            .map(|v| (v.h, v.value))
    }

    /// Smallest and largest `H` with `L(H) >= 0`.
    pub fn support(&self) -> Option<(f64, f64)> {
        let mut inside = self.legendre.iter().filter(|v| !v.below_zero);
        let first = inside.next()?.h;
        let last = inside.next_back().map_or(first, |v| v.h);
        Some((first, last))
    }
}

/// `L(H, a)` over an `H`-grid and an `a`-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSurface {
    pub h_grid: Vec<f64>,
    pub a_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub options: ScalingOptions,
    pub columns: Vec<SpectrumColumn>,
}

impl SpectrumSurface {
    pub fn column(&self, a: f64) -> Option<&SpectrumColumn> {
        self.columns.iter().find(|c| (c.a - a).abs() < 1e-12)
    }
}

/// Runs the scaling fit and the Legendre transform for every `a` in `a_grid`.
/// With `j_range = None` each column uses the default leader range of its own
/// anisotropy.
pub fn spectrum_surface(
    pyramid: &LeaderPyramid,
    a_grid: &[f64],
    p_grid: &[f64],
    h_grid: &[f64],
    j_range: Option<JRange>,
    options: ScalingOptions,
) -> Result<SpectrumSurface> {
    if a_grid.is_empty() || h_grid.is_empty() {
        return Err(Error::Domain(
            "anisotropy and exponent grids must be nonempty".into(),
        ));
    }
    let alphas = a_grid
        .iter()
        .map(|&a| Anisotropy::new(a))
        .collect::<Result<Vec<_>>>()?;
    let moments = MomentTable::new(pyramid, p_grid)?;
    let columns = alphas
        .par_iter()
        .map(|&alpha| {
            let range = match j_range {
                Some(r) => Ok(r),
                None => default_leader_range(pyramid.level(), alpha),
            };
            let fitted = range.and_then(|r| {
                let exps = moments.table(alpha, r)?.exponents(options)?;
                let legendre = legendre_spectrum(&exps, h_grid)?;
                Ok((exps, legendre))
            });
            match fitted {
                Ok((exps, legendre)) => SpectrumColumn {
                    a: alpha.a1(),
                    j_range: Some(exps.j_range),
                    exponents: Some(exps),
                    legendre,
                    error: None,
                },
                Err(e) => SpectrumColumn {
                    a: alpha.a1(),
                    j_range: range_or_none(j_range, pyramid.level(), alpha),
                    exponents: None,
                    legendre: Vec::new(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(SpectrumSurface {
        h_grid: h_grid.to_vec(),
        a_grid: a_grid.to_vec(),
        p_grid: moments.p_grid().to_vec(),
        options,
        columns,
    })
}

fn range_or_none(j_range: Option<JRange>, level: u32, alpha: Anisotropy) -> Option<JRange> {
    j_range.or_else(|| default_leader_range(level, alpha).ok())
}
