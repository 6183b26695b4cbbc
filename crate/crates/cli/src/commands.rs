use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use hywav_core::besov::{besov_critical_exponent, global_holder_exponent};
use hywav_core::io::{
    decode_coeffs, decode_grid, encode_coeffs, write_grid, write_heatmap, write_series, Cell,
    CellFlag, CoeffFile, GridFormat, ResultTable, Table, COEFF_MAGIC,
};
use hywav_core::leaders::leader_pyramid;
use hywav_core::multifractal::{
    spectrum_surface, structure_function, ScaleFlag, ScalingOptions, SpectrumColumn,
    SpectrumSurface,
};
use hywav_core::pointwise::{exponent_map, pointwise_exponent, PairSelection};
use hywav_core::scales::gamma_set;
use hywav_core::synthesis::{
    synth_cusp, synth_fbs, synth_lacunary, synth_prescribed, CoefficientProfile, Synthesized,
};
use hywav_core::transform::hyperbolic_forward;
use hywav_core::{Anisotropy, Error, Filter, HyperbolicCoeffs, JRange, Normalization, Result};

use crate::{
    BesovArgs, Command, FilterArgs, InputArgs, LeadersArgs, PointwiseArgs, ProfileArg,
    SelectionArg, SpectrumArgs, SynthCommand, SynthOutput, TransformArgs, EXIT_DEGENERATE,
};

pub(crate) fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Transform(a) => transform(a),
        Command::Leaders(a) => leaders(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Besov(a) => besov(a),
        Command::Pointwise(a) => pointwise(a),
        Command::Synth(s) => synth(s),
        Command::Selftest => unreachable!("handled by the caller"),
    }
}

impl FilterArgs {
    fn resolve(&self) -> Result<Filter> {
        match (&self.filter, self.moments) {
            (Some(name), _) => Filter::by_name(name),
            (None, Some(m)) => Filter::daubechies(m),
            (None, None) => Ok(Filter::default()),
        }
    }
}

/// Coefficients of the input together with the description echoed into results.
struct Loaded {
    coeffs: HyperbolicCoeffs,
    filter: String,
    source: Value,
}

fn load(args: &InputArgs, norm: Normalization) -> Result<Loaded> {
    let bytes = std::fs::read(&args.input).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", args.input.display()),
        ))
    })?;
    if bytes.starts_with(COEFF_MAGIC) {
        let file = decode_coeffs(&bytes)?;
        let source = json!({
            "path": args.input.display().to_string(),
            "kind": "coefficients",
            "level": file.coeffs.level(),
            "normalization": file.coeffs.normalization().to_string(),
        });
        return Ok(Loaded {
            coeffs: file.coeffs,
            filter: file.filter,
            source,
        });
    }
    let format = args
        .format
        .unwrap_or_else(|| GridFormat::from_path(&args.input));
    let grid = decode_grid(&bytes, format)?;
    let filter = args.filter.resolve()?;
    let source = json!({
        "path": args.input.display().to_string(),
        "kind": "grid",
        "format": format.to_string(),
        "level": grid.level(),
    });
    Ok(Loaded {
        coeffs: hyperbolic_forward(&grid, &filter, norm)?,
        filter: filter.name().to_string(),
        source,
    })
}

fn emit(table: &ResultTable, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => table.write(path),
        None => {
            println!("{}", table.to_json()?);
            Ok(())
        }
    }
}

fn jrange_value(r: Option<JRange>) -> Value {
    r.map_or(Value::Null, |r| json!([r.lo, r.hi]))
}

fn transform(args: TransformArgs) -> Result<i32> {
    let loaded = load(&args.input, args.norm.into())?;
    let file = CoeffFile {
        filter: loaded.filter,
        coeffs: loaded.coeffs,
    };
    std::fs::write(&args.output, encode_coeffs(&file)?)?;
    println!(
        "wrote {} ({} coefficients, level {}, {}, {})",
        args.output.display(),
        file.coeffs.len(),
        file.coeffs.level(),
        file.coeffs.normalization(),
        file.filter
    );
    Ok(0)
}

fn flag_of(flag: ScaleFlag) -> CellFlag {
    match flag {
        ScaleFlag::Complete => CellFlag::Ok,
        ScaleFlag::Clipped => CellFlag::Clipped,
        ScaleFlag::Sparse => CellFlag::Sparse,
    }
}

fn leaders(args: LeadersArgs) -> Result<i32> {
    let loaded = load(&args.input, Normalization::L1)?;
    let pyr = leader_pyramid(&loaded.coeffs)?;
    let level = pyr.level();
    let range = match args.jrange {
        Some(r) => r,
        None => JRange::new(1, level.saturating_sub(1).max(1))?,
    };
    let a_grid = args.alpha_grid.values.clone();
    let alphas = a_grid
        .iter()
        .map(|&a| Anisotropy::new(a))
        .collect::<Result<Vec<_>>>()?;
    let js: Vec<f64> = range.iter().map(f64::from).collect();
    let (mut max_rows, mut count_rows, mut zero_rows) = (Vec::new(), Vec::new(), Vec::new());
    for j in range.iter() {
        let (mut maxes, mut counts, mut zeros) = (Vec::new(), Vec::new(), Vec::new());
        for &alpha in &alphas {
            let point = structure_function(&pyr, 1.0, alpha, j)?;
            let flag = flag_of(point.flag);
            let max = gamma_set(j, alpha)?
                .available(level)
                .flat_map(|(j1, j2)| pyr.block(j1, j2).iter().copied())
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
            maxes.push(Cell::flagged(
                max,
                if max.is_some() {
                    flag
                } else {
                    CellFlag::Degenerate
                },
            ));
            counts.push(Cell::flagged(Some(point.count as f64), flag));
            let fraction = (point.count > 0).then(|| point.zeros as f64 / point.count as f64);
            zeros.push(Cell::flagged(
                fraction,
                if fraction.is_some() {
                    flag
                } else {
                    CellFlag::Degenerate
                },
            ));
        }
        max_rows.push(maxes);
        count_rows.push(counts);
        zero_rows.push(zeros);
    }
    let mut table = ResultTable::new(
        "leaders",
        json!({
            "input": loaded.source,
            "filter": loaded.filter,
            "alpha_grid": args.alpha_grid.raw,
            "jrange": [range.lo, range.hi],
        }),
    );
    for (name, rows) in [
        ("leader_max", max_rows),
        ("leader_count", count_rows),
        ("zero_fraction", zero_rows),
    ] {
        table.tables.push(Table::new(
            name,
            ("j", js.clone()),
            ("a", a_grid.clone()),
            rows,
        )?);
    }
    emit(&table, args.out.as_ref())?;
    Ok(0)
}

fn spectrum(args: SpectrumArgs) -> Result<i32> {
    let loaded = load(&args.input, Normalization::L1)?;
    let pyr = leader_pyramid(&loaded.coeffs)?;
    let options = ScalingOptions {
        count_correction: !args.no_count_correction,
    };
    let surf = spectrum_surface(
        &pyr,
        &args.alpha_grid.values,
        &args.p_grid.values,
        &args.h_grid.values,
        args.jrange,
        options,
    )?;
    let a_grid = surf.a_grid.clone();
    let n_a = a_grid.len();
    let mut omega = vec![vec![Cell::missing(); n_a]; surf.p_grid.len()];
    let mut r2 = omega.clone();
    let mut legendre = vec![vec![Cell::missing(); n_a]; surf.h_grid.len()];
    let mut summary = Vec::with_capacity(n_a);
    for (k, col) in surf.columns.iter().enumerate() {
        let clipped = clipped_range(col, pyr.level())?;
        let mark = |cell: Cell| match (cell.flag, clipped) {
            (CellFlag::Ok, true) => Cell::flagged(cell.value, CellFlag::Clipped),
            _ => cell,
        };
        if let Some(exps) = &col.exponents {
            for (i, (w, fit)) in exps.omega.iter().zip(&exps.fits).enumerate() {
                omega[i][k] = mark((*w).into());
                r2[i][k] = mark(fit.map(|f| f.r_squared).into());
            }
        }
        for (i, l) in col.legendre.iter().enumerate() {
            let flag = if l.below_zero {
                CellFlag::BelowZero
            } else {
                CellFlag::Ok
            };
            legendre[i][k] = mark(Cell::flagged(Some(l.value), flag));
        }
        let argmax = col.argmax();
        let support = col.support();
        summary.push(vec![
            argmax.map(|v| v.0).into(),
            argmax.map(|v| v.1).into(),
            support.map(|v| v.0).into(),
            support.map(|v| v.1).into(),
            col.j_range.map(|r| r.lo as f64).into(),
            col.j_range.map(|r| r.hi as f64).into(),
        ]);
    }
    let errors: Vec<Value> = surf
        .columns
        .iter()
        .filter_map(|c| c.error.as_ref().map(|e| json!({"a": c.a, "error": e})))
        .collect();
    let mut table = ResultTable::new(
        "spectrum",
        json!({
            "input": loaded.source,
            "filter": loaded.filter,
            "alpha_grid": args.alpha_grid.raw,
            "p_grid": args.p_grid.raw,
            "H_grid": args.h_grid.raw,
            "jrange": jrange_value(args.jrange),
            "count_correction": options.count_correction,
            "column_errors": errors,
        }),
    );
    let p = surf.p_grid.clone();
    table.tables.push(Table::new(
        "omega",
        ("p", p.clone()),
        ("a", a_grid.clone()),
        omega,
    )?);
    table.tables.push(Table::new(
        "omega_r_squared",
        ("p", p),
        ("a", a_grid.clone()),
        r2,
    )?);
    table.tables.push(Table::new(
        "legendre",
        ("H", surf.h_grid.clone()),
        ("a", a_grid.clone()),
        legendre,
    )?);
    table.tables.push(Table::named(
        "summary",
        ("a", a_grid),
        &[
            "argmax_H",
            "max_L",
            "support_lo",
            "support_hi",
            "j_lo",
            "j_hi",
        ],
        summary,
    )?);
    if let Some(dir) = &args.series_dir {
        write_spectrum_series(dir, &surf)?;
    }
    emit(&table, args.out.as_ref())?;
    if surf.columns.iter().all(|c| c.exponents.is_none()) {
        eprintln!("error: no anisotropy of the grid could be estimated");
        return Ok(EXIT_DEGENERATE);
    }
    Ok(0)
}

/// True when some shell of the column's range reaches past the finest scale.
fn clipped_range(col: &SpectrumColumn, level: u32) -> Result<bool> {
    let Some(range) = col.j_range else {
        return Ok(false);
    };
    let alpha = Anisotropy::new(col.a)?;
    for j in range.iter() {
        if gamma_set(j, alpha)?.is_clipped(level) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn write_spectrum_series(dir: &Path, surf: &SpectrumSurface) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for col in &surf.columns {
        let Some(exps) = &col.exponents else { continue };
        let omega: Vec<(f64, f64)> = exps.defined().collect();
        write_series(
            &dir.join(format!("omega_a{:.4}.txt", col.a)),
            ["p", "omega"],
            &omega,
        )?;
        let legendre: Vec<(f64, f64)> = col.legendre.iter().map(|l| (l.h, l.value)).collect();
        write_series(
            &dir.join(format!("legendre_a{:.4}.txt", col.a)),
            ["H", "L"],
            &legendre,
        )?;
    }
    Ok(())
}

fn fit_cells(result: Result<hywav_core::besov::ExponentFit>) -> Result<[Cell; 2]> {
    match result {
        Ok(f) => Ok([Cell::ok(f.estimate), Cell::ok(f.fit.r_squared)]),
        Err(Error::Degenerate(_)) => Ok([Cell::missing(), Cell::missing()]),
        Err(e) => Err(e),
    }
}

fn besov(args: BesovArgs) -> Result<i32> {
    let loaded = load(&args.input, Normalization::L1)?;
    let mut rows = Vec::new();
    let mut any = false;
    for &a in &args.alpha_grid.values {
        let alpha = Anisotropy::new(a)?;
        let [s, s_r2] = fit_cells(besov_critical_exponent(
            &loaded.coeffs,
            args.p,
            args.q,
            alpha,
            args.jrange,
        ))?;
        let [h, h_r2] = fit_cells(global_holder_exponent(&loaded.coeffs, alpha, args.jrange))?;
        any |= s.value.is_some() || h.value.is_some();
        rows.push(vec![s, s_r2, h, h_r2]);
    }
    let mut table = ResultTable::new(
        "besov",
        json!({
            "input": loaded.source,
            "filter": loaded.filter,
            "p": args.p.to_string(),
            "q": args.q.to_string(),
            "alpha_grid": args.alpha_grid.raw,
            "jrange": jrange_value(args.jrange),
        }),
    );
    table.tables.push(Table::named(
        "exponents",
        ("a", args.alpha_grid.values.clone()),
        &["s_c", "s_c_r_squared", "holder", "holder_r_squared"],
        rows,
    )?);
    emit(&table, args.out.as_ref())?;
    if !any {
        eprintln!("error: no anisotropy of the grid could be estimated");
        return Ok(EXIT_DEGENERATE);
    }
    Ok(0)
}

fn pointwise(args: PointwiseArgs) -> Result<i32> {
    let loaded = load(&args.input, Normalization::L1)?;
    let pyr = leader_pyramid(&loaded.coeffs)?;
    let alpha = Anisotropy::new(args.alpha)?;
    let mode = match args.selection {
        SelectionArg::Gamma => PairSelection::GammaBand,
        SelectionArg::All => PairSelection::AllPairs,
    };
    let mut params = json!({
        "input": loaded.source,
        "filter": loaded.filter,
        "alpha": args.alpha,
        "jrange": jrange_value(args.jrange),
        "selection": mode,
    });
    let mut table;
    if let Some(x0) = args.x0 {
        let est = pointwise_exponent(&pyr, x0, alpha, args.jrange, mode)?;
        params["x0"] = json!(x0);
        table = ResultTable::new("pointwise", params);
        table.tables.push(Table::named(
            "estimate",
            ("x1", vec![x0[0]]),
            &["x2", "h_hat", "r_squared", "pairs"],
            vec![vec![
                Cell::ok(x0[1]),
                Cell::ok(est.h_hat),
                Cell::ok(est.fit.r_squared),
                Cell::ok(est.scales_used.len() as f64),
            ]],
        )?);
    } else {
        let map = exponent_map(&pyr, alpha, args.jrange, args.stride, mode)?;
        params["stride"] = json!(args.stride);
        params["map_jrange"] = json!([map.j_range.lo, map.j_range.hi]);
        table = ResultTable::new("pointwise", params);
        let axis: Vec<f64> = (0..map.side).map(|i| map.point(i, 0)[0]).collect();
        let rows = map
            .values
            .chunks(map.side)
            .map(|r| r.iter().map(|&v| v.into()).collect())
            .collect();
        table.tables.push(Table::new(
            "h_hat",
            ("x1", axis.clone()),
            ("x2", axis),
            rows,
        )?);
        if let Some(path) = &args.heatmap {
            write_heatmap(path, map.side, &map.values)?;
        }
        if map.values.iter().all(Option::is_none) {
            emit(&table, args.out.as_ref())?;
            eprintln!("error: no lattice point could be estimated");
            return Ok(EXIT_DEGENERATE);
        }
    }
    emit(&table, args.out.as_ref())?;
    Ok(0)
}

fn synth(command: SynthCommand) -> Result<i32> {
    let (result, output) = match command {
        SynthCommand::Prescribed {
            s,
            alpha,
            level,
            seed,
            profile,
            delta,
            output,
        } => {
            let profile = match profile {
                ProfileArg::Plain => CoefficientProfile::Plain,
                ProfileArg::InverseScale => CoefficientProfile::InverseScale,
                ProfileArg::OffDiagonal => CoefficientProfile::OffDiagonal { delta },
            };
            let filter = output.filter.resolve()?;
            (
                synth_prescribed(s, Anisotropy::new(alpha)?, level, seed, profile, &filter)?,
                output,
            )
        }
        SynthCommand::Cusp {
            x0,
            s,
            alpha,
            level,
            window,
            output,
        } => {
            let filter = output.filter.resolve()?;
            (
                synth_cusp(x0, s, Anisotropy::new(alpha)?, level, window, &filter)?,
                output,
            )
        }
        SynthCommand::Lacunary {
            h1,
            h2,
            gamma,
            alpha,
            level,
            seed,
            output,
        } => {
            let filter = output.filter.resolve()?;
            (
                synth_lacunary(h1, h2, gamma, Anisotropy::new(alpha)?, level, seed, &filter)?,
                output,
            )
        }
        SynthCommand::Fbs {
            h1,
            h2,
            level,
            seed,
            output,
        } => {
            let filter = output.filter.resolve()?;
            (synth_fbs(h1, h2, level, seed, &filter)?, output)
        }
    };
    write_synthesized(&result, &output)?;
    Ok(0)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn write_synthesized(result: &Synthesized, output: &SynthOutput) -> Result<()> {
    let format = output
        .format
        .unwrap_or_else(|| GridFormat::from_path(&output.out));
    write_grid(&result.grid, &output.out, format)?;
    let mut sidecar = json!({
        "params": result.params,
        "filter": result.filter,
        "grid": output.out.display().to_string(),
        "format": format.to_string(),
    });
    if let Some(counts) = &result.counts {
        sidecar["lacunary_counts"] = json!(counts);
    }
    if let Some(path) = &output.coeffs_out {
        let file = CoeffFile {
            filter: result.filter.clone(),
            coeffs: result.coeffs.clone(),
        };
        std::fs::write(path, encode_coeffs(&file)?)?;
        sidecar["coefficients"] = json!(path.display().to_string());
    }
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(sidecar_path(&output.out), text + "\n")?;
    Ok(())
}
