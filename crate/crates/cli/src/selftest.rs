//! Quick oracle checks on small synthetic fields.

use hywav_core::leaders::leader_pyramid;
use hywav_core::multifractal::structure_function;
use hywav_core::oracles::{anisotropy_from_slopes, brute_leader};
use hywav_core::scales::{gamma_memberships, gamma_set};
use hywav_core::synthesis::{synth_fbs, synth_lacunary};
use hywav_core::transform::{hyperbolic_forward, hyperbolic_inverse};
use hywav_core::{Anisotropy, Filter, HyperbolicCube, LeaderPyramid, Normalization, Result};

use crate::EXIT_SELFTEST;

type Check = fn() -> Result<(bool, String)>;

fn reconstruction() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for name in ["db1", "db2", "db4", "db8"] {
        let filter = Filter::by_name(name)?;
        let field = synth_fbs(0.4, 0.6, 7, 1, &filter)?;
        let c = hyperbolic_forward(&field.grid, &filter, Normalization::L1)?;
        let back = hyperbolic_inverse(&c, &filter)?;
        let err = back
            .values()
            .iter()
            .zip(field.grid.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err / field.grid.max_abs());
    }
    Ok((
        worst <= 1e-9,
        format!("relative reconstruction error {worst:.2e}"),
    ))
}

fn leaders() -> Result<(bool, String)> {
    let field = synth_fbs(0.5, 0.5, 5, 2, &Filter::default())?;
    let coeffs = field.coeffs.renormalize(Normalization::L1);
    let pyr = leader_pyramid(&coeffs)?;
    let mut mismatches = 0;
    for j1 in 0..5 {
        for j2 in 0..5 {
            for k1 in 0..1usize << j1 {
                for k2 in 0..1usize << j2 {
                    let cube = HyperbolicCube::new(j1, j2, k1, k2)?;
                    if brute_leader(&coeffs, &cube, false)? != pyr.at(&cube) {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    Ok((
        mismatches == 0,
        format!("{mismatches} leader mismatches against enumeration"),
    ))
}

fn gamma() -> Result<(bool, String)> {
    let alpha = Anisotropy::new(0.8)?;
    let mut worst = (usize::MAX, 0);
    let mut consistent = true;
    for j1 in 0..=20 {
        for j2 in 0..=20 {
            let js = gamma_memberships(j1, j2, alpha, 60);
            worst = (worst.0.min(js.len()), worst.1.max(js.len()));
            for j in 1..=60 {
                consistent &= gamma_set(j, alpha)?.contains(j1, j2) == js.contains(&j);
            }
        }
    }
    Ok((
        consistent && worst.0 >= 1 && worst.1 <= 6,
        format!(
            "a=0.8 shell multiplicity {}..{}, membership consistent: {consistent}",
            worst.0, worst.1
        ),
    ))
}

fn slopes() -> Result<(bool, String)> {
    let (s, a) = anisotropy_from_slopes(0.75, 0.5)?;
    let ok = (s - 0.6).abs() < 1e-15 && (a - 0.8).abs() < 1e-15;
    Ok((ok, format!("slopes (0.75, 0.5) give s {s}, a {a}")))
}

fn counting() -> Result<(bool, String)> {
    let alpha = Anisotropy::new(0.8)?;
    let field = synth_lacunary(0.4, 0.9, 0.3, alpha, 8, 3, &Filter::default())?;
    let raw = LeaderPyramid::from_magnitudes(&field.coeffs)?;
    let counts = field.counts.as_deref().unwrap_or_default();
    let mut worst = 0.0f64;
    for j in 1..=6 {
        for p in [-1.0, 1.0, 2.0] {
            let s = structure_function(&raw, p, alpha, j)?.value;
            let mut oracle = 0.0;
            for (j1, j2) in gamma_set(j, alpha)?.available(8) {
                let m = alpha.scale_index(j1, j2);
                if let Some(c) = counts.iter().find(|c| (c.j1, c.j2) == (j1, j2)) {
                    oracle += c.rough as f64 * 2f64.powf(-0.4 * p * m)
                        + c.smooth as f64 * 2f64.powf(-0.9 * p * m);
                }
            }
            oracle *= 2f64.powi(-2 * j as i32);
            worst = worst.max((s / oracle - 1.0).abs());
        }
    }
    Ok((
        worst <= 1e-9,
        format!("lacunary structure functions vs counts, relative gap {worst:.2e}"),
    ))
}

pub(crate) fn run() -> i32 {
    let checks: [(&str, Check); 5] = [
        ("transform reconstruction", reconstruction),
        ("leader enumeration", leaders),
        ("shell sets", gamma),
        ("slope algebra", slopes),
        ("counting oracle", counting),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let (pass, detail) = check().unwrap_or_else(|e| (false, e.to_string()));
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        failed += usize::from(!pass);
    }
    if failed == 0 {
        0
    } else {
        println!("{failed} check(s) failed");
        EXIT_SELFTEST
    }
}
