//! Acceptance suite: one PASS/FAIL line per criterion, with measured values,
//! tolerances and runtime. Exits nonzero when any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hywav_core::besov::{besov_critical_exponent, global_holder_exponent, Exponent};
use hywav_core::leaders::leader_pyramid;
use hywav_core::multifractal::{
    linear_grid, moment_grid, spectrum_surface, structure_function, ScalingOptions, SpectrumSurface,
};
use hywav_core::oracles::{brute_leader, detect_anisotropy, DetectionOptions};
use hywav_core::pointwise::{exponent_map, pointwise_exponent, PairSelection};
use hywav_core::regression::fit_line;
use hywav_core::scales::{gamma_set, largest_unclipped};
use hywav_core::synthesis::{
    synth_cusp, synth_lacunary, synth_prescribed, CoefficientProfile, Synthesized, CUSP_WINDOW,
};
use hywav_core::transform::{hyperbolic_forward, hyperbolic_inverse};
use hywav_core::{
    Anisotropy, Filter, Grid2D, HyperbolicCoeffs, HyperbolicCube, LeaderPyramid, Normalization,
};
use hywav_validation::{anisotropy, dense_hyperbolic_l2, gamma_oracle, lacunary_structure_oracle};

const SEED: u64 = 7;
const FIELD_LEVEL: u32 = 11;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

struct Suite {
    failures: Vec<String>,
}

impl Suite {
    fn run(&mut self, id: u32, name: &str, budget_s: u64, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let in_budget = elapsed <= Duration::from_secs(budget_s);
        let pass = outcome.pass && in_budget;
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} [{id:>2}] {name}: {} | {:.1}s (budget {budget_s}s{})",
            outcome.detail,
            elapsed.as_secs_f64(),
            if in_budget { "" } else { ", exceeded" }
        );
        if !pass {
            self.failures.push(format!("{id} {name}"));
        }
    }
}

fn random_grid(level: u32, rng: &mut ChaCha8Rng) -> Grid2D {
    let n = 1usize << (2 * level);
    Grid2D::new(level, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn l1(grid: &Grid2D) -> HyperbolicCoeffs {
    hyperbolic_forward(grid, &Filter::default(), Normalization::L1).unwrap()
}

fn pyramid(grid: &Grid2D) -> LeaderPyramid {
    leader_pyramid(&l1(grid)).unwrap()
}

fn prescribed(a: f64) -> Synthesized {
    let alpha = Anisotropy::new(a).unwrap();
    synth_prescribed(
        0.6,
        alpha,
        FIELD_LEVEL,
        SEED,
        CoefficientProfile::default(),
        &Filter::default(),
    )
    .unwrap()
}

fn h_grid() -> Vec<f64> {
    linear_grid(0.0, 1.5, 151).unwrap()
}

fn p_grid() -> Vec<f64> {
    moment_grid(-5.0, 5.0, 0.25).unwrap()
}

fn torus_gap(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn transform_correctness() -> Outcome {
    let filter = Filter::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut recon, mut parseval) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let level = 5 + (i % 6) as u32;
        let g = random_grid(level, &mut rng);
        let c = hyperbolic_forward(&g, &filter, Normalization::L2).unwrap();
        let back = hyperbolic_inverse(&c, &filter).unwrap();
        let err = back
            .values()
            .iter()
            .zip(g.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        recon = recon.max(err / g.max_abs());
        let expected = g.values().iter().map(|v| v * v).sum::<f64>() * 2f64.powi(-2 * level as i32);
        parseval = parseval.max((c.energy() - expected).abs() / expected);
    }
    let mut dense = 0.0f64;
    for name in ["db1", "db2", "db4"] {
        let f = Filter::by_name(name).unwrap();
        for _ in 0..4 {
            let g = random_grid(4, &mut rng);
            let fast = hyperbolic_forward(&g, &f, Normalization::L2).unwrap();
            let slow = dense_hyperbolic_l2(&g, &f).unwrap();
            for (a, b) in fast
                .blocks()
                .iter()
                .flatten()
                .zip(slow.blocks().iter().flatten())
            {
                dense = dense.max((a - b).abs());
            }
        }
    }
    Outcome::new(
        recon <= 1e-9 && parseval <= 1e-10 && dense <= 1e-10,
        format!(
            "reconstruction {recon:.2e} (<= 1e-9), Parseval {parseval:.2e} (<= 1e-10), dense-matrix gap at J=4 {dense:.2e} (<= 1e-10)"
        ),
    )
}

fn leader_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut mismatches = 0usize;
    let mut cubes = 0usize;
    for i in 0..50 {
        let coeffs = if i % 2 == 0 {
            l1(&random_grid(3 + (i / 2 % 2) as u32, &mut rng))
        } else {
            let level = 1 + (i / 2 % 4) as u32;
            let mut c = HyperbolicCoeffs::zeros(level, Normalization::L1).unwrap();
            for j1 in -1..level as i32 {
                for j2 in -1..level as i32 {
                    c.block_mut(j1, j2)
                        .iter_mut()
                        .for_each(|v| *v = rng.random_range(-1.0..1.0));
                }
            }
            c
        };
        let pyr = leader_pyramid(&coeffs).unwrap();
        let level = coeffs.level();
        for j1 in 0..level {
            for j2 in 0..level {
                for k1 in 0..1usize << j1 {
                    for k2 in 0..1usize << j2 {
                        let cube = HyperbolicCube::new(j1, j2, k1, k2).unwrap();
                        cubes += 1;
                        if brute_leader(&coeffs, &cube, false).unwrap() != pyr.at(&cube) {
                            mismatches += 1;
                        }
                    }
                }
            }
        }
    }
    Outcome::new(
        mismatches == 0,
        format!("{mismatches} mismatches over {cubes} cubes (exact equality)"),
    )
}

fn gamma_machinery() -> Outcome {
    const J_MAX: u32 = 80;
    let mut set_mismatches = Vec::new();
    let mut details = Vec::new();
    let mut multiplicity_ok = true;
    for tenths in [[4, 16], [8, 12], [10, 10], [13, 7], [16, 4]] {
        let alpha = anisotropy(tenths);
        for j in 1..=40 {
            if gamma_set(j, alpha).unwrap().pairs != gamma_oracle(j, tenths) {
                set_mismatches.push((tenths[0], j));
            }
        }
        let shells: Vec<Vec<(u32, u32)>> = (1..=J_MAX).map(|j| gamma_oracle(j, tenths)).collect();
        let (mut lo, mut hi) = (usize::MAX, 0);
        for j1 in 0..=20 {
            for j2 in 0..=20 {
                let count = shells.iter().filter(|s| s.contains(&(j1, j2))).count();
                lo = lo.min(count);
                hi = hi.max(count);
            }
        }
        multiplicity_ok &= (1..=6).contains(&lo) && (1..=6).contains(&hi);
        details.push(format!("a={:.1}: {lo}..{hi}", tenths[0] as f64 / 10.0));
    }
    Outcome::new(
        set_mismatches.is_empty() && multiplicity_ok,
        format!(
            "set mismatches {:?}; multiplicity over [0,20]² must lie in [1,6]: {}",
            set_mismatches,
            details.join(", ")
        ),
    )
}

fn global_round_trip(field: &Synthesized) -> Outcome {
    let alpha = Anisotropy::new(0.8).unwrap();
    let c = l1(&field.grid);
    let g = global_holder_exponent(&c, alpha, None).unwrap();
    let two = Exponent::Finite(2.0);
    let b = besov_critical_exponent(&c, two, two, alpha, None).unwrap();
    let pass = (g.estimate - 0.6).abs() <= 0.05
        && g.r_squared() >= 0.99
        && (b.estimate - 0.6).abs() <= 0.05;
    Outcome::new(
        pass,
        format!(
            "Hölder {:.4} (0.6 ± 0.05) with R² {:.4} (>= 0.99) over j {}..={}; s_c(2,2) {:.4} (0.6 ± 0.05)",
            g.estimate, g.r_squared(), g.j_range.lo, g.j_range.hi, b.estimate
        ),
    )
}

fn anisotropy_detection(field: &Synthesized) -> Outcome {
    let opts = DetectionOptions::for_level(FIELD_LEVEL);
    let e = detect_anisotropy(&field.grid, &opts).unwrap();
    Outcome::new(
        (e.s - 0.6).abs() <= 0.1 && (e.a - 0.8).abs() <= 0.15,
        format!(
            "s {:.4} (0.6 ± 0.1), a {:.4} (0.8 ± 0.15); order-{} slopes {:.4}, {:.4}",
            e.s, e.a, opts.order, e.slopes[0], e.slopes[1]
        ),
    )
}

fn cusp_estimates(window: Option<[f64; 2]>) -> (f64, [f64; 2], f64) {
    let alpha = Anisotropy::new(1.2).unwrap();
    let x0 = [0.5, 0.5];
    let field = synth_cusp(x0, 0.8, alpha, FIELD_LEVEL, window, &Filter::default()).unwrap();
    let pyr = pyramid(&field.grid);
    let h = pointwise_exponent(&pyr, x0, alpha, None, PairSelection::default())
        .unwrap()
        .h_hat;
    let map = exponent_map(&pyr, alpha, None, 64, PairSelection::default()).unwrap();
    let ((i1, i2), _) = map.argmin().unwrap();
    let cell = map.stride as f64 / (1u32 << FIELD_LEVEL) as f64;
    (h, map.point(i1, i2), cell)
}

fn pointwise_round_trip() -> Outcome {
    let (h, at, cell) = cusp_estimates(None);
    let near = torus_gap(at[0], 0.5) <= cell + 1e-12 && torus_gap(at[1], 0.5) <= cell + 1e-12;
    Outcome::new(
        (h - 0.8).abs() <= 0.1 && near,
        format!(
            "h_hat(x0) {h:.4} (0.8 ± 0.1); map minimum at ({:.4}, {:.4}), within one cell ({cell}) of x0: {near}",
            at[0], at[1]
        ),
    )
}

fn surface(pyr: &LeaderPyramid, a_grid: &[f64]) -> SpectrumSurface {
    spectrum_surface(
        pyr,
        a_grid,
        &p_grid(),
        &h_grid(),
        None,
        ScalingOptions::default(),
    )
    .unwrap()
}

fn monofractal_spectrum(field: &Synthesized) -> Outcome {
    let a_grid = linear_grid(0.2, 1.8, 9).unwrap();
    let surf = surface(&pyramid(&field.grid), &a_grid);
    let col = surf.column(0.8).unwrap();
    let exps = col.exponents.as_ref().unwrap();
    let (mut ps, mut omegas, mut worst) = (Vec::new(), Vec::new(), 0.0f64);
    for (&p, w) in exps.p_grid.iter().zip(&exps.omega) {
        if (1.0..=4.0).contains(&p.abs()) {
            let Some(w) = *w else {
                worst = f64::INFINITY;
                continue;
            };
            worst = worst.max((w / p - 0.6).abs());
            ps.push(p);
            omegas.push(w);
        }
    }
    let affine = fit_line(&ps, &omegas).map(|f| f.r_squared).unwrap_or(0.0);
    let (h, l) = col.argmax().unwrap_or((f64::NAN, f64::NAN));

    let small = synth_prescribed(
        0.6,
        Anisotropy::new(0.8).unwrap(),
        10,
        SEED,
        CoefficientProfile::default(),
        &Filter::default(),
    )
    .unwrap();
    let start = Instant::now();
    let small_surf = surface(&pyramid(&small.grid), &a_grid);
    let small_time = start.elapsed().as_secs_f64();

    Outcome::new(
        worst <= 0.05 && affine >= 0.99 && (h - 0.6).abs() <= 0.05 && (l - 2.0).abs() <= 0.1 && small_time < 120.0,
        format!(
            "max |ω(p)/p - 0.6| over 1<=|p|<=4 {worst:.4} (<= 0.05), line-fit R² {affine:.5} (>= 0.99); argmax L at H {h:.2} (0.6 ± 0.05) with L {l:.4} (2 ± 0.1); 1024² run with {} a × {} p in {small_time:.1}s (< 120s, {} columns estimated)",
            a_grid.len(),
            small_surf.p_grid.len(),
            small_surf.columns.iter().filter(|c| c.exponents.is_some()).count()
        ),
    )
}

fn isotropy_invariance() -> Outcome {
    let field = prescribed(1.0);
    let a_grid: Vec<f64> = (0..=12).map(|i| 0.4 + 0.1 * i as f64).collect();
    let surf = surface(&pyramid(&field.grid), &a_grid);
    let reference = surf.column(1.0).and_then(|c| c.argmax()).map(|(h, _)| h);
    let mut worst = 0.0f64;
    let mut cells = Vec::new();
    for col in &surf.columns {
        match (col.argmax(), reference) {
            (Some((h, _)), Some(r)) => {
                worst = worst.max((h - r).abs());
                cells.push(format!("{:.1}:{h:.2}", col.a));
            }
            _ => {
                worst = f64::INFINITY;
                cells.push(format!("{:.1}:undefined", col.a));
            }
        }
    }
    Outcome::new(
        worst <= 0.1,
        format!(
            "max |argmax_H L(H,a) - argmax_H L(H,1)| = {worst:.2} (<= 0.1); argmax by a {}",
            cells.join(" ")
        ),
    )
}

fn two_exponent_field() -> Outcome {
    let tenths = [8, 12];
    let alpha = anisotropy(tenths);
    let field =
        synth_lacunary(0.4, 0.9, 0.3, alpha, FIELD_LEVEL, SEED, &Filter::default()).unwrap();
    let surf = surface(&pyramid(&field.grid), &[0.8]);
    let support = surf.columns[0].support();
    let spans = support.is_some_and(|(lo, hi)| lo <= 0.3 && hi >= 1.0);

    let raw = LeaderPyramid::from_magnitudes(&field.coeffs).unwrap();
    let counts = field.counts.as_ref().unwrap();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for j in 1..=largest_unclipped(FIELD_LEVEL, alpha).unwrap() {
        for p in [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0] {
            let s = structure_function(&raw, p, alpha, j).unwrap().value;
            let oracle = lacunary_structure_oracle(counts, (0.4, 0.9), tenths, j, FIELD_LEVEL, p);
            worst = worst.max((s / oracle - 1.0).abs());
            checked += 1;
        }
    }
    Outcome::new(
        spans && worst <= 1e-9,
        format!(
            "support {} must contain [0.3, 1.0]; counting oracle relative gap {worst:.2e} over {checked} (j, p) (<= 1e-9)",
            support.map_or("undefined".into(), |(lo, hi)| format!("[{lo:.2}, {hi:.2}]"))
        ),
    )
}

/// Every estimator on one grid, flattened for comparison.
#[derive(Debug, PartialEq)]
struct Estimates {
    values: Vec<f64>,
    abscissae: Vec<Vec<f64>>,
}

fn all_estimates(grid: &Grid2D) -> Estimates {
    let alpha = Anisotropy::new(0.8).unwrap();
    let c = l1(grid);
    let pyr = leader_pyramid(&c).unwrap();
    let surf = surface(&pyr, &[0.8]);
    let col = &surf.columns[0];
    let exps = col.exponents.as_ref().unwrap();
    let mut values: Vec<f64> = exps.omega.iter().map(|w| w.unwrap_or(f64::NAN)).collect();
    values.extend(col.legendre.iter().map(|l| l.value));
    let two = Exponent::Finite(2.0);
    let b = besov_critical_exponent(&c, two, two, alpha, None).unwrap();
    let g = global_holder_exponent(&c, alpha, None).unwrap();
    let h = pointwise_exponent(&pyr, [0.5, 0.25], alpha, None, PairSelection::default()).unwrap();
    values.extend([b.estimate, g.estimate, h.h_hat]);
    let abscissae = vec![
        exps.j_range.iter().map(f64::from).collect(),
        b.j_range.iter().map(f64::from).collect(),
        h.scales_used
            .iter()
            .map(|&(j1, j2)| alpha.scale_index(j1, j2))
            .collect(),
    ];
    Estimates { values, abscissae }
}

fn invariance(field: &Synthesized) -> Outcome {
    let base = all_estimates(&field.grid);
    let scaled = all_estimates(&field.grid.map(|v| 32.0 * v).unwrap());
    let shifted = all_estimates(&field.grid.map(|v| v + 3.7).unwrap());
    let gap = |other: &Estimates| {
        base.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| {
                if a.is_nan() && b.is_nan() {
                    0.0
                } else {
                    (a - b).abs()
                }
            })
            .fold(0.0, f64::max)
    };
    let (gs, gt) = (gap(&scaled), gap(&shifted));
    let same_x = base.abscissae == scaled.abscissae && base.abscissae == shifted.abscissae;
    Outcome::new(
        gs <= 1e-9 && gt <= 1e-9 && same_x,
        format!(
            "{} estimates (ω, L, s_c, Hölder, h_hat); max change under ×32 {gs:.2e}, under +3.7 {gt:.2e} (<= 1e-9); regression abscissae identical: {same_x}",
            base.values.len()
        ),
    )
}

fn main() {
    let mut suite = Suite {
        failures: Vec::new(),
    };
    suite.run(1, "transform correctness", 30, transform_correctness);
    suite.run(2, "leader oracle", 10, leader_oracle);
    suite.run(3, "Γ_j machinery", 5, gamma_machinery);
    let field = prescribed(0.8);
    suite.run(4, "global-exponent round trip", 60, || {
        global_round_trip(&field)
    });
    suite.run(5, "anisotropy detection", 30, || {
        anisotropy_detection(&field)
    });
    suite.run(6, "pointwise round trip", 60, pointwise_round_trip);
    let (h, at, _) = cusp_estimates(Some(CUSP_WINDOW));
    println!(
        "INFO [ 6] windowed cusp {CUSP_WINDOW:?}: h_hat(x0) {h:.4}, map minimum at ({:.4}, {:.4})",
        at[0], at[1]
    );
    suite.run(7, "monofractal spectrum", 120, || {
        monofractal_spectrum(&field)
    });
    suite.run(8, "isotropy invariance", 120, isotropy_invariance);
    suite.run(9, "two-exponent field", 120, two_exponent_field);
    suite.run(10, "invariance suite", 120, || invariance(&field));
    if suite.failures.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!(
            "acceptance: {} failing: {}",
            suite.failures.len(),
            suite.failures.join("; ")
        );
        std::process::exit(1);
    }
}
