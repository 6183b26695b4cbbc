//! The `hywav` command line.
//!
//! Exit codes: 0 on success, 1 when `selftest` finds a failure, 2 for usage,
//! input, format and normalization errors, 3 when an estimate is degenerate.
//! `HYWAV_THREADS` caps the number of worker threads.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hywav_core::besov::Exponent;
use hywav_core::io::GridFormat;
use hywav_core::{Error, JRange, Normalization};

mod commands;
mod selftest;

pub const EXIT_SELFTEST: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "hywav",
    version,
    about = "Hyperbolic wavelet analysis of 2D fields"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hyperbolic wavelet transform of a grid into a coefficient file.
    Transform(TransformArgs),
    /// Per-shell leader statistics.
    Leaders(LeadersArgs),
    /// Scaling exponents and Legendre spectrum over an anisotropy grid.
    Spectrum(SpectrumArgs),
    /// Critical Besov and uniform Hölder exponents over an anisotropy grid.
    Besov(BesovArgs),
    /// Pointwise anisotropic Hölder exponent at a point or on a lattice.
    Pointwise(PointwiseArgs),
    /// Synthesize a test field.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Run the built-in oracle checks.
    Selftest,
}

/// Where the analyzed data comes from. A file starting with the coefficient
/// magic is read as coefficients, anything else as a grid.
#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Grid format; guessed from the extension when omitted.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<GridFormat>,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Filter name, e.g. db4.
    #[arg(long, conflicts_with = "moments")]
    pub filter: Option<String>,
    /// Daubechies filter with this many vanishing moments.
    #[arg(long)]
    pub moments: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "l1")]
    pub norm: NormArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NormArg {
    L1,
    L2,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::L1 => Normalization::L1,
            NormArg::L2 => Normalization::L2,
        }
    }
}

#[derive(Debug, Args)]
pub struct LeadersArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Anisotropies `lo:hi:n`.
    #[arg(long, default_value = "1:1:1", value_parser = parse_linear)]
    pub alpha_grid: Grid,
    #[arg(long, value_parser = parse_jrange)]
    pub jrange: Option<JRange>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Anisotropies `lo:hi:n`.
    #[arg(long, default_value = "0.2:1.8:9", value_parser = parse_linear)]
    pub alpha_grid: Grid,
    /// Moment orders `lo:hi:step`; 0 is replaced by ±1/64.
    #[arg(long, default_value = "-5:5:0.25", value_parser = parse_moments, allow_hyphen_values = true)]
    pub p_grid: Grid,
    /// Exponents `lo:hi:n` at which the Legendre spectrum is evaluated.
    #[arg(long = "H-grid", default_value = "0:1.5:151", value_parser = parse_linear)]
    pub h_grid: Grid,
    #[arg(long, value_parser = parse_jrange)]
    pub jrange: Option<JRange>,
    /// Regress raw `log2 S` instead of the count-corrected statistic.
    #[arg(long)]
    pub no_count_correction: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for `(p, ω)` and `(H, L)` series files, one pair per anisotropy.
    #[arg(long)]
    pub series_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BesovArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_parser = parse_exponent)]
    pub p: Exponent,
    #[arg(long, value_parser = parse_exponent)]
    pub q: Exponent,
    #[arg(long, default_value = "0.2:1.8:9", value_parser = parse_linear)]
    pub alpha_grid: Grid,
    #[arg(long, value_parser = parse_jrange)]
    pub jrange: Option<JRange>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SelectionArg {
    Gamma,
    All,
}

#[derive(Debug, Args)]
pub struct PointwiseArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Point `x1,x2` in `[0,1)²`.
    #[arg(long, value_parser = parse_pair, required_unless_present = "map", conflicts_with = "map")]
    pub x0: Option<[f64; 2]>,
    /// Estimate on the lattice of every `stride`-th sample.
    #[arg(long)]
    pub map: bool,
    #[arg(long, default_value_t = 32, requires = "map")]
    pub stride: usize,
    /// PGM heatmap of the exponent map.
    #[arg(long, requires = "map")]
    pub heatmap: Option<PathBuf>,
    #[arg(long, value_parser = parse_jrange)]
    pub jrange: Option<JRange>,
    #[arg(long, value_enum, default_value = "gamma")]
    pub selection: SelectionArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthOutput {
    /// Grid file; the parameters go to `<out>.json` alongside.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<GridFormat>,
    /// Also write the exact coefficients the field was built from.
    #[arg(long)]
    pub coeffs_out: Option<PathBuf>,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProfileArg {
    Plain,
    InverseScale,
    OffDiagonal,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Random-sign field with prescribed global regularity.
    Prescribed {
        #[arg(long)]
        s: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long = "J")]
        level: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "off-diagonal")]
        profile: ProfileArg,
        /// Damping rate of the off-diagonal profile.
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[command(flatten)]
        output: SynthOutput,
    },
    /// `|x - x0|_α^s` on the torus.
    Cusp {
        #[arg(long, value_parser = parse_pair)]
        x0: [f64; 2],
        #[arg(long)]
        s: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long = "J")]
        level: u32,
        /// Smooth window radii `lo,hi`.
        #[arg(long, value_parser = parse_pair)]
        window: Option<[f64; 2]>,
        #[command(flatten)]
        output: SynthOutput,
    },
    /// Two-exponent lacunary field.
    Lacunary {
        #[arg(long)]
        h1: f64,
        #[arg(long)]
        h2: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long = "J")]
        level: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: SynthOutput,
    },
    /// Gaussian surrogate of a fractional Brownian sheet.
    Fbs {
        #[arg(long)]
        h1: f64,
        #[arg(long)]
        h2: f64,
        #[arg(long = "J")]
        level: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: SynthOutput,
    },
}

/// A parsed numeric grid together with the text it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub raw: String,
    pub values: Vec<f64>,
}

fn split3(s: &str) -> Result<(f64, f64, &str), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, third] = parts[..] else {
        return Err(format!("expected lo:hi:x, got '{s}'"));
    };
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| format!("'{v}' is not a number"))
    };
    Ok((num(lo)?, num(hi)?, third))
}

fn parse_linear(s: &str) -> Result<Grid, String> {
    let (lo, hi, n) = split3(s)?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| format!("'{n}' is not a point count"))?;
    let values = hywav_core::multifractal::linear_grid(lo, hi, n).map_err(|e| e.to_string())?;
    Ok(Grid {
        raw: s.to_string(),
        values,
    })
}

fn parse_moments(s: &str) -> Result<Grid, String> {
    let (lo, hi, step) = split3(s)?;
    let step: f64 = step
        .trim()
        .parse()
        .map_err(|_| format!("'{step}' is not a step"))?;
    let values = hywav_core::multifractal::moment_grid(lo, hi, step).map_err(|e| e.to_string())?;
    Ok(Grid {
        raw: s.to_string(),
        values,
    })
}

fn parse_jrange(s: &str) -> Result<JRange, String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
    let lo = lo
        .trim()
        .parse()
        .map_err(|_| format!("'{lo}' is not a shell index"))?;
    let hi = hi
        .trim()
        .parse()
        .map_err(|_| format!("'{hi}' is not a shell index"))?;
    JRange::new(lo, hi).map_err(|e| e.to_string())
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected a,b, got '{s}'"))?;
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| format!("'{v}' is not a number"))
    };
    Ok([num(a)?, num(b)?])
}

fn parse_exponent(s: &str) -> Result<Exponent, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> Result<GridFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Exit code for a library error.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Degenerate(_) => EXIT_DEGENERATE,
        _ => EXIT_INPUT,
    }
}

fn thread_count() -> Result<Option<usize>, String> {
    match std::env::var("HYWAV_THREADS") {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!(
                "HYWAV_THREADS must be a positive integer, got '{v}'"
            )),
        },
        Err(e) => Err(format!("HYWAV_THREADS: {e}")),
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let threads = match thread_count() {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_INPUT;
        }
    };
    let execute = || match cli.command {
        Command::Selftest => selftest::run(),
        command => match commands::dispatch(command) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
    };
    match threads {
        None => execute(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(execute),
            Err(e) => {
                eprintln!("error: cannot start {n} worker threads: {e}");
                EXIT_INPUT
            }
        },
    }
}
