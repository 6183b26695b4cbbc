//! Reference computations for the acceptance suite, written independently of
//! the fast code paths in `hywav-core`: dense transform matrices, exact
//! integer enumeration of the `Γ_j(α)` shells, and closed-form structure
//! functions of lacunary coefficient fields.

use hywav_core::synthesis::LacunaryCount;
use hywav_core::{Anisotropy, Filter, Grid2D, HyperbolicCoeffs, Normalization, Result};

pub type Matrix = Vec<Vec<f64>>;

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, m, k) = (a.len(), b[0].len(), b.len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for l in 0..k {
            let ail = a[i][l];
            if ail != 0.0 {
                for j in 0..m {
                    out[i][j] += ail * b[l][j];
                }
            }
        }
    }
    out
}

fn transpose(a: &Matrix) -> Matrix {
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j]).collect())
        .collect()
}

/// Periodic analysis of the first `m` entries as an `n × n` matrix, identity elsewhere.
fn stage_matrix(filter: &Filter, n: usize, m: usize) -> Matrix {
    let mut s: Matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j && i >= m { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let offset = filter.centering_offset() as i64;
    for k in 0..m / 2 {
        for (i, (h, g)) in filter.lowpass().iter().zip(filter.highpass()).enumerate() {
            let col = (2 * k as i64 - offset + i as i64).rem_euclid(m as i64) as usize;
            s[k][col] += h;
            s[m / 2 + k][col] += g;
        }
    }
    s
}

/// Full-depth periodic DWT of length `n` as a dense matrix acting on column
/// vectors; output order is `[approx, d_0, d_1, d_1, d_2 ×4, ...]`.
pub fn dense_dwt_matrix(filter: &Filter, n: usize) -> Matrix {
    let mut w: Matrix = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut m = n;
    while m >= 2 {
        w = matmul(&stage_matrix(filter, n, m), &w);
        m /= 2;
    }
    w
}

/// `L²` hyperbolic coefficients as `2^-J W F Wᵀ`, sliced into scale-pair blocks.
pub fn dense_hyperbolic_l2(grid: &Grid2D, filter: &Filter) -> Result<HyperbolicCoeffs> {
    let n = grid.side();
    let w = dense_dwt_matrix(filter, n);
    let f: Matrix = grid.values().chunks(n).map(<[f64]>::to_vec).collect();
    let c = matmul(&matmul(&w, &f), &transpose(&w));
    let unit = 1.0 / n as f64;
    let span = |j: i32| {
        if j < 0 {
            0..1
        } else {
            1usize << j..2usize << j
        }
    };
    let top = grid.level() as i32;
    let mut blocks = Vec::new();
    for j1 in -1..top {
        for j2 in -1..top {
            let mut block = Vec::new();
            for r in span(j1) {
                block.extend(span(j2).map(|col| c[r][col] * unit));
            }
            blocks.push(block);
        }
    }
    HyperbolicCoeffs::from_blocks(grid.level(), Normalization::L2, blocks)
}

/// `Γ_j(α)` for `α_i = tenths_i / 10`, straight from its three defining
/// inequalities with exact integer floors; pairs in lexicographic order.
pub fn gamma_oracle(j: u32, tenths: [u32; 2]) -> Vec<(u32, u32)> {
    let floor = |v: u32, t: u32| (v * t / 10) as i64;
    let lo = |i: usize| floor(j - 1, tenths[i]) - 1;
    let hi = |i: usize| floor(j, tenths[i]) + 1;
    let band = |i: usize, v: i64| lo(i) <= v && v <= hi(i);
    let strip = |i: usize, v: i64| 0 <= v && v <= lo(i);
    let mut out = Vec::new();
    for j1 in 0..=hi(0).max(0) {
        for j2 in 0..=hi(1).max(0) {
            let hl = band(0, j1) && strip(1, j2);
            let lh = strip(0, j1) && band(1, j2);
            let hh = band(0, j1) && band(1, j2);
            if hl || lh || hh {
                out.push((j1 as u32, j2 as u32));
            }
        }
    }
    out
}

/// `2^-2j Σ_{Γ_j} (N_1 2^(-h1 p m) + N_2 2^(-h2 p m))` from the per-block counts
/// of a lacunary field, restricted to pairs below `level`.
pub fn lacunary_structure_oracle(
    counts: &[LacunaryCount],
    (h1, h2): (f64, f64),
    tenths: [u32; 2],
    j: u32,
    level: u32,
    p: f64,
) -> f64 {
    let (a1, a2) = (tenths[0] as f64 / 10.0, tenths[1] as f64 / 10.0);
    let mut sum = 0.0;
    for (j1, j2) in gamma_oracle(j, tenths) {
        if j1 >= level || j2 >= level {
            continue;
        }
        let c = counts
            .iter()
            .find(|c| c.j1 == j1 && c.j2 == j2)
            .expect("every wavelet block has a count");
        let m = (j1 as f64 / a1).max(j2 as f64 / a2);
        sum += c.rough as f64 * 2f64.powf(-h1 * p * m) + c.smooth as f64 * 2f64.powf(-h2 * p * m);
    }
    sum * 2f64.powi(-2 * j as i32)
}

/// Anisotropy from tenths, e.g. `[8, 12]` for `(0.8, 1.2)`.
pub fn anisotropy(tenths: [u32; 2]) -> Anisotropy {
    Anisotropy::new(tenths[0] as f64 / 10.0).expect("admissible anisotropy")
}
