//! Sequence-space Besov, Hölder and Sobolev functionals on `Γ_j(α)` shells,
//! and critical exponents estimated from their geometric decay.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::anisotropy::Anisotropy;
use crate::error::{Error, Result};
use crate::regression::{fit_line, LinearFit};
use crate::scales::{default_coefficient_range, gamma_set, largest_unclipped, JRange};
use crate::transform::{HyperbolicCoeffs, Normalization};

/// An integrability index in `(0, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn finite(v: f64) -> Result<Self> {
        if v > 0.0 && v.is_finite() {
            Ok(Self::Finite(v))
        } else {
            Err(Error::Domain(format!(
                "integrability index must lie in (0, inf], got {v}"
            )))
        }
    }

    /// `1 / p`, zero for `p = ∞`.
    pub fn reciprocal(self) -> f64 {
        match self {
            Self::Finite(v) => 1.0 / v,
            Self::Infinite => 0.0,
        }
    }

    fn validate(self) -> Result<Self> {
        match self {
            Self::Finite(v) => Self::finite(v),
            Self::Infinite => Ok(self),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" => Ok(Self::Infinite),
            t => {
                let v: f64 = t.parse().map_err(|_| {
                    Error::Domain(format!("cannot parse integrability index {t:?}"))
                })?;
                Self::finite(v)
            }
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(v) => write!(f, "{v}"),
            Self::Infinite => write!(f, "inf"),
        }
    }
}

/// `β(p, q) = max(1/p - 1, 0) + max(1 - 1/q, 0)`.
pub fn beta_pq(p: Exponent, q: Exponent) -> f64 {
    (p.reciprocal() - 1.0).max(0.0) + (1.0 - q.reciprocal()).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovQuery {
    pub p: Exponent,
    pub q: Exponent,
    pub s: f64,
    /// Logarithmic smoothness exponent of `B^{s,α}_{p,q,|log|^β}`.
    pub beta: f64,
    pub alpha: Anisotropy,
}

impl BesovQuery {
    pub fn new(p: Exponent, q: Exponent, s: f64, alpha: Anisotropy) -> Result<Self> {
        let query = Self {
            p: p.validate()?,
            q: q.validate()?,
            s,
            beta: 0.0,
            alpha,
        };
        if !s.is_finite() {
            return Err(Error::Domain(format!("smoothness must be finite, got {s}")));
        }
        Ok(query)
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }
}

/// `(Σ_k |c|^p)^(1/p)` over block `(j1, j2)`, or the largest magnitude for `p = ∞`.
pub fn block_lp_norm(coeffs: &HyperbolicCoeffs, j1: u32, j2: u32, p: Exponent) -> Result<f64> {
    coeffs.require(Normalization::L1)?;
    if j1 >= coeffs.level() || j2 >= coeffs.level() {
        return Err(Error::Domain(format!(
            "scale pair ({j1}, {j2}) outside level {}",
            coeffs.level()
        )));
    }
    Ok(lp_norm(coeffs.block(j1 as i32, j2 as i32), p.validate()?))
}

fn lp_norm(block: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::Infinite => block.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        Exponent::Finite(p) => {
            // Rescale by the largest entry so large p neither overflows nor underflows.
            let top = block.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if top == 0.0 {
                return 0.0;
            }
            let sum: f64 = block.iter().map(|v| (v.abs() / top).powf(p)).sum();
            top * sum.powf(1.0 / p)
        }
    }
}

/// The shell statistic `T_j` for one shell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelValue {
    pub j: u32,
    pub value: f64,
}

/// `T_j` on every shell `j ≥ 1` whose `Γ_j(α)` lies inside the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStatistics {
    pub alpha: Anisotropy,
    pub p: Exponent,
    pub q: Exponent,
    pub values: Vec<LevelValue>,
}

impl LevelStatistics {
    pub fn get(&self, j: u32) -> Option<f64> {
        self.values.iter().find(|v| v.j == j).map(|v| v.value)
    }

    /// Truncation depth: the finest shell included.
    pub fn depth(&self) -> u32 {
        self.values.last().map_or(0, |v| v.j)
    }
}

/// `T_j = Σ_{Γ_j(α)} 2^(-(j1+j2) q/p) ‖c_{j1,j2}‖_p^q`, or for `q = ∞`
/// `T_j = max_{Γ_j(α)} 2^(-(j1+j2)/p) ‖c_{j1,j2}‖_p`.
pub fn level_statistic(coeffs: &HyperbolicCoeffs, query: &BesovQuery) -> Result<LevelStatistics> {
    coeffs.require(Normalization::L1)?;
    let (p, q) = (query.p.validate()?, query.q.validate()?);
    let level = coeffs.level();
    let top = largest_unclipped(level, query.alpha).unwrap_or(0);
    let mut values = Vec::with_capacity(top as usize);
    for j in 1..=top {
        let gamma = gamma_set(j, query.alpha)?;
        let terms = gamma.pairs.iter().map(|&(j1, j2)| {
            let weight = 2f64.powf(-((j1 + j2) as f64) * p.reciprocal());
            weight * lp_norm(coeffs.block(j1 as i32, j2 as i32), p)
        });
        let value = match q {
            Exponent::Infinite => terms.fold(0.0f64, f64::max),
            Exponent::Finite(q) => terms.map(|t| t.powf(q)).sum(),
        };
        values.push(LevelValue { j, value });
    }
    Ok(LevelStatistics {
        alpha: query.alpha,
        p,
        q,
        values,
    })
}

/// A functional value with the finest shell that entered it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    pub value: f64,
    pub depth: u32,
}

/// `(Σ_j j^(qβ(p,q) - βq) 2^(jsq) T_j)^(1/q)` truncated to the shells present
/// in the data; for `q = ∞`, `max_j j^(β(p,∞) - β) 2^(js) T_j`.
pub fn besov_upper_functional(coeffs: &HyperbolicCoeffs, query: &BesovQuery) -> Result<Functional> {
    let stats = level_statistic(coeffs, query)?;
    let b = beta_pq(stats.p, stats.q);
    let value = match stats.q {
        Exponent::Infinite => stats
            .values
            .iter()
            .map(|t| (t.j as f64).powf(b - query.beta) * 2f64.powf(t.j as f64 * query.s) * t.value)
            .fold(0.0f64, f64::max),
        Exponent::Finite(q) => stats
            .values
            .iter()
            .map(|t| {
                (t.j as f64).powf(q * b - query.beta * q)
                    * 2f64.powf(t.j as f64 * query.s * q)
                    * t.value
            })
            .sum::<f64>()
            .powf(1.0 / q),
    };
    Ok(Functional {
        value,
        depth: stats.depth(),
    })
}

/// `(Σ_j 2^(2js) Σ_{Γ_j(α)} 2^(-(j1+j2)) ‖c_{j1,j2}‖_2²)^(1/2)`, truncated like
/// [`besov_upper_functional`].
pub fn sobolev_functional(
    coeffs: &HyperbolicCoeffs,
    s: f64,
    alpha: Anisotropy,
) -> Result<Functional> {
    let two = Exponent::Finite(2.0);
    let stats = level_statistic(coeffs, &BesovQuery::new(two, two, s, alpha)?)?;
    let value = stats
        .values
        .iter()
        .map(|t| 2f64.powf(2.0 * t.j as f64 * s) * t.value)
        .sum::<f64>()
        .sqrt();
    Ok(Functional {
        value,
        depth: stats.depth(),
    })
}

/// A regularity exponent read off a log-log regression over shells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub estimate: f64,
    pub fit: LinearFit,
    pub j_range: JRange,
}

impl ExponentFit {
    pub fn r_squared(&self) -> f64 {
        self.fit.r_squared
    }
}

fn regress_levels(stats: &LevelStatistics, j_range: JRange, scale: f64) -> Result<ExponentFit> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for j in j_range.iter() {
        let t = stats.get(j).ok_or_else(|| {
            Error::Degenerate(format!("shell {j} is not fully available in the data"))
        })?;
        if t <= 0.0 {
            return Err(Error::Degenerate(format!(
                "shell {j} has a zero level statistic"
            )));
        }
        x.push(j as f64);
        y.push(t.log2());
    }
    if x.len() < 3 {
        return Err(Error::Degenerate(
            "fewer than 3 shells in the regression range".into(),
        ));
    }
    let fit = fit_line(&x, &y)?;
    Ok(ExponentFit {
        estimate: -fit.slope * scale,
        fit,
        j_range,
    })
}

fn resolve_range(
    coeffs: &HyperbolicCoeffs,
    alpha: Anisotropy,
    j_range: Option<JRange>,
) -> Result<JRange> {
    match j_range {
        Some(r) => Ok(r),
        None => default_coefficient_range(coeffs.level(), alpha),
    }
}

/// Uniform Hölder exponent: minus the slope of `log2 max_{Γ_j(α)} ‖c_{j1,j2}‖_∞` against `j`.
pub fn global_holder_exponent(
    coeffs: &HyperbolicCoeffs,
    alpha: Anisotropy,
    j_range: Option<JRange>,
) -> Result<ExponentFit> {
    let range = resolve_range(coeffs, alpha, j_range)?;
    let inf = Exponent::Infinite;
    let stats = level_statistic(coeffs, &BesovQuery::new(inf, inf, 0.0, alpha)?)?;
    regress_levels(&stats, range, 1.0)
}

/// Critical Besov smoothness `s_c(p, q, α) = -(1/q)` times the slope of `log2 T_j`
/// (for `q = ∞`, minus the slope of the max-form statistic).
pub fn besov_critical_exponent(
    coeffs: &HyperbolicCoeffs,
    p: Exponent,
    q: Exponent,
    alpha: Anisotropy,
    j_range: Option<JRange>,
) -> Result<ExponentFit> {
    let range = resolve_range(coeffs, alpha, j_range)?;
    let stats = level_statistic(coeffs, &BesovQuery::new(p, q, 0.0, alpha)?)?;
    let scale = match q {
        Exponent::Infinite => 1.0,
        Exponent::Finite(q) => 1.0 / q,
    };
    regress_levels(&stats, range, scale)
}
