//! File formats: grids (binary PGM, raw f64, CSV), coefficient containers,
//! JSON result tables with a validity flag on every cell, and plain-text
//! series files. All binary formats are little-endian except the 16-bit PGM
//! samples, which the PGM format defines as big-endian.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::{Grid2D, HyperbolicCoeffs, Normalization, MAX_LEVEL};

pub const GRID_MAGIC: &[u8; 4] = b"HWG1";
pub const COEFF_MAGIC: &[u8; 4] = b"HWC1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridFormat {
    Pgm,
    F64Raw,
    Csv,
}

impl GridFormat {
    /// Guess from the extension: `.pgm`, `.csv`, anything else is raw f64.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("pgm") => GridFormat::Pgm,
            Some("csv") => GridFormat::Csv,
            _ => GridFormat::F64Raw,
        }
    }
}

impl FromStr for GridFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pgm" => Ok(GridFormat::Pgm),
            "f64raw" | "raw" | "hwg" => Ok(GridFormat::F64Raw),
            "csv" => Ok(GridFormat::Csv),
            _ => Err(Error::Domain(format!(
                "unknown grid format '{s}' (pgm, f64raw, csv)"
            ))),
        }
    }
}

impl fmt::Display for GridFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridFormat::Pgm => "pgm",
            GridFormat::F64Raw => "f64raw",
            GridFormat::Csv => "csv",
        })
    }
}

fn dyadic_level(side: usize, what: &str) -> Result<u32> {
    if side == 0 || !side.is_power_of_two() {
        return Err(Error::Shape(format!(
            "{what}: side {side} is not a power of two"
        )));
    }
    let level = side.trailing_zeros();
    if level > MAX_LEVEL {
        return Err(Error::Shape(format!(
            "{what}: side {side} exceeds 2^{MAX_LEVEL}"
        )));
    }
    Ok(level)
}

fn square_grid(width: usize, height: usize, values: Vec<f64>, what: &str) -> Result<Grid2D> {
    if width != height {
        return Err(Error::Shape(format!(
            "{what}: grid is {height}×{width}, not square"
        )));
    }
    Grid2D::new(dyadic_level(width, what)?, values)
}

pub fn read_grid(path: &Path, format: GridFormat) -> Result<Grid2D> {
    decode_grid(&std::fs::read(path)?, format)
}

pub fn write_grid(grid: &Grid2D, path: &Path, format: GridFormat) -> Result<()> {
    std::fs::write(path, encode_grid(grid, format))?;
    Ok(())
}

pub fn decode_grid(bytes: &[u8], format: GridFormat) -> Result<Grid2D> {
    match format {
        GridFormat::Pgm => decode_pgm(bytes),
        GridFormat::F64Raw => decode_raw(bytes),
        GridFormat::Csv => decode_csv(bytes),
    }
}

/// PGM output clamps values to `[0, 1]` and quantizes them to 16 bits.
pub fn encode_grid(grid: &Grid2D, format: GridFormat) -> Vec<u8> {
    match format {
        GridFormat::Pgm => {
            let samples: Vec<u16> = grid
                .values()
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
                .collect();
            encode_pgm16(grid.side(), &samples)
        }
        GridFormat::F64Raw => {
            let mut out = Vec::with_capacity(16 + 8 * grid.values().len());
            out.extend_from_slice(GRID_MAGIC);
            out.extend_from_slice(&grid.level().to_le_bytes());
            out.extend_from_slice(&[0u8; 8]);
            for v in grid.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out
        }
        GridFormat::Csv => {
            let mut s = String::new();
            for row in grid.values().chunks(grid.side()) {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            s.into_bytes()
        }
    }
}

fn encode_pgm16(side: usize, samples: &[u16]) -> Vec<u8> {
    let mut out = format!("P5\n{side} {side}\n65535\n").into_bytes();
    for s in samples {
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

fn decode_raw(bytes: &[u8]) -> Result<Grid2D> {
    if bytes.len() < 16 || &bytes[..4] != GRID_MAGIC {
        return Err(Error::Format("raw grid: missing HWG1 magic".into()));
    }
    let level = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if level > MAX_LEVEL {
        return Err(Error::Format(format!(
            "raw grid: level {level} exceeds {MAX_LEVEL}"
        )));
    }
    let n = 1usize << (2 * level);
    let payload = &bytes[16..];
    if payload.len() != 8 * n {
        return Err(Error::Format(format!(
            "raw grid: level {level} needs {} payload bytes, found {}",
            8 * n,
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Grid2D::new(level, values)
}

fn decode_csv(bytes: &[u8]) -> Result<Grid2D> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::Format("csv: not UTF-8".into()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|c| {
                c.trim().parse::<f64>().map_err(|_| {
                    Error::Format(format!("csv line {}: cannot parse '{}'", i + 1, c.trim()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let height = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != width) {
        return Err(Error::Shape(format!(
            "csv: row {} has {} entries, expected {width}",
            bad + 1,
            rows[bad].len()
        )));
    }
    square_grid(width, height, rows.concat(), "csv")
}

/// Splits the PGM header into whitespace-separated tokens, skipping `#` comments.
fn pgm_header(bytes: &[u8]) -> Result<([usize; 3], usize)> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::Format("pgm: missing P5 magic".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("pgm: malformed header".into()))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Format("pgm: malformed header".into()));
    }
    Ok((fields, pos + 1))
}

fn decode_pgm(bytes: &[u8]) -> Result<Grid2D> {
    let ([width, height, maxval], start) = pgm_header(bytes)?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("pgm: invalid maxval {maxval}")));
    }
    let depth = if maxval < 256 { 1 } else { 2 };
    let raster = &bytes[start..];
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Format("pgm: dimensions overflow".into()))?;
    if raster.len() != n * depth {
        return Err(Error::Format(format!(
            "pgm: expected {} raster bytes, found {}",
            n * depth,
            raster.len()
        )));
    }
    let scale = maxval as f64;
    let values = if depth == 1 {
        raster.iter().map(|&b| b as f64 / scale).collect()
    } else {
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / scale)
            .collect()
    };
    square_grid(width, height, values, "pgm")
}

/// Coefficients together with the name of the filter that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffFile {
    pub filter: String,
    pub coeffs: HyperbolicCoeffs,
}

pub fn encode_coeffs(file: &CoeffFile) -> Result<Vec<u8>> {
    let name = file.filter.as_bytes();
    if name.len() > u8::MAX as usize {
        return Err(Error::Domain(format!(
            "filter name '{}' is longer than 255 bytes",
            file.filter
        )));
    }
    let level = file.coeffs.level();
    let mut out = Vec::with_capacity(8 + name.len() + 8 * file.coeffs.len());
    out.extend_from_slice(COEFF_MAGIC);
    out.extend_from_slice(&(level as u16).to_le_bytes());
    out.push(match file.coeffs.normalization() {
        Normalization::L1 => 1,
        Normalization::L2 => 2,
    });
    out.push(name.len() as u8);
    out.extend_from_slice(name);
    for block in file.coeffs.blocks() {
        for v in block {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_coeffs(bytes: &[u8]) -> Result<CoeffFile> {
    if bytes.len() < 8 || &bytes[..4] != COEFF_MAGIC {
        return Err(Error::Format("coefficient file: missing HWC1 magic".into()));
    }
    let level = u16::from_le_bytes([bytes[4], bytes[5]]) as u32;
    if level > MAX_LEVEL {
        return Err(Error::Format(format!(
            "coefficient file: level {level} exceeds {MAX_LEVEL}"
        )));
    }
    let normalization = match bytes[6] {
        1 => Normalization::L1,
        2 => Normalization::L2,
        b => {
            return Err(Error::Format(format!(
                "coefficient file: unknown normalization byte {b}"
            )))
        }
    };
    let name_len = bytes[7] as usize;
    let payload_start = 8 + name_len;
    let filter = bytes
        .get(8..payload_start)
        .and_then(|b| std::str::from_utf8(b).ok())
        .ok_or_else(|| Error::Format("coefficient file: truncated or invalid filter name".into()))?
        .to_string();
    let payload = &bytes[payload_start..];
    let expected = 8usize << (2 * level);
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "coefficient file: level {level} needs {expected} payload bytes, found {}",
            payload.len()
        )));
    }
    let mut values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut blocks = Vec::new();
    let top = level as i32;
    for j1 in -1..top {
        for j2 in -1..top {
            let (r, c) = HyperbolicCoeffs::block_shape(j1, j2);
            blocks.push(values.by_ref().take(r * c).collect());
        }
    }
    Ok(CoeffFile {
        filter,
        coeffs: HyperbolicCoeffs::from_blocks(level, normalization, blocks)?,
    })
}

pub fn write_coeffs(file: &CoeffFile, path: &Path) -> Result<()> {
    std::fs::write(path, encode_coeffs(file)?)?;
    Ok(())
}

pub fn read_coeffs(path: &Path) -> Result<CoeffFile> {
    decode_coeffs(&std::fs::read(path)?)
}

/// Validity of a result cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellFlag {
    Ok,
    /// Too few usable scales or values to estimate.
    Degenerate,
    /// Estimated from scales partly beyond the finest level.
    Clipped,
    /// More than a quarter of the leaders vanish.
    Sparse,
    /// A Legendre value below zero, kept for inspection.
    BelowZero,
}

/// A numeric result and its flag; `value` is `None` only when nothing could be computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub value: Option<f64>,
    pub flag: CellFlag,
}

impl Cell {
    pub fn ok(value: f64) -> Self {
        Cell {
            value: Some(value),
            flag: CellFlag::Ok,
        }
    }

    pub fn flagged(value: Option<f64>, flag: CellFlag) -> Self {
        Cell { value, flag }
    }

    pub fn missing() -> Self {
        Cell {
            value: None,
            flag: CellFlag::Degenerate,
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(value: Option<f64>) -> Self {
        value.map_or_else(Cell::missing, Cell::ok)
    }
}

/// A labelled two-dimensional array of cells. `rows[i][k]` belongs to
/// `row_values[i]` and to `column_values[k]`, or to `column_names[k]` for
/// tables whose columns are different statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub row_label: String,
    pub row_values: Vec<f64>,
    pub column_label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub column_values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub column_names: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(
        name: impl Into<String>,
        (row_label, row_values): (&str, Vec<f64>),
        (column_label, column_values): (&str, Vec<f64>),
        rows: Vec<Vec<Cell>>,
    ) -> Result<Self> {
        if rows.len() != row_values.len() || rows.iter().any(|r| r.len() != column_values.len()) {
            return Err(Error::Shape("table cells do not match its axes".into()));
        }
        Ok(Table {
            name: name.into(),
            row_label: row_label.into(),
            row_values,
            column_label: column_label.into(),
            column_values,
            column_names: Vec::new(),
            rows,
        })
    }

    /// A table whose columns are named statistics.
    pub fn named(
        name: impl Into<String>,
        (row_label, row_values): (&str, Vec<f64>),
        column_names: &[&str],
        rows: Vec<Vec<Cell>>,
    ) -> Result<Self> {
        if rows.len() != row_values.len() || rows.iter().any(|r| r.len() != column_names.len()) {
            return Err(Error::Shape("table cells do not match its axes".into()));
        }
        Ok(Table {
            name: name.into(),
            row_label: row_label.into(),
            row_values,
            column_label: "statistic".into(),
            column_values: Vec::new(),
            column_names: column_names.iter().map(|s| s.to_string()).collect(),
            rows,
        })
    }
}

/// The JSON document written by every analysis command: the command name,
/// its fully resolved parameters and the resulting tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub command: String,
    pub version: String,
    pub parameters: serde_json::Value,
    pub tables: Vec<Table>,
}

impl ResultTable {
    pub fn new(command: impl Into<String>, parameters: serde_json::Value) -> Self {
        ResultTable {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            parameters,
            tables: Vec::new(),
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("result table: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Two-column text file for plotting, with a `#` header line.
pub fn write_series(path: &Path, labels: [&str; 2], points: &[(f64, f64)]) -> Result<()> {
    let mut text = format!("# {} {}\n", labels[0], labels[1]);
    for (x, y) in points {
        text.push_str(&format!("{x:?} {y:?}\n"));
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// 16-bit PGM of a square array scaled from its finite minimum (black) to
/// its maximum (white); missing entries are written black.
pub fn write_heatmap(path: &Path, side: usize, values: &[Option<f64>]) -> Result<()> {
    if values.len() != side * side {
        return Err(Error::Shape(format!(
            "heatmap needs {} values, got {}",
            side * side,
            values.len()
        )));
    }
    let finite = values.iter().flatten().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let span = if hi > lo { hi - lo } else { 1.0 };
    let samples: Vec<u16> = values
        .iter()
        .map(|v| match v {
            Some(v) if v.is_finite() => {
                (((v - lo) / span).clamp(0.0, 1.0) * 65535.0).round() as u16
            }
            _ => 0,
        })
        .collect();
    std::fs::write(path, encode_pgm16(side, &samples))?;
    Ok(())
}
