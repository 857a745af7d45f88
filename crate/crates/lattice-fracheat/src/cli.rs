//! Command-line driver.
//!
//! Every subcommand reads its options from flags and, optionally, from a
//! JSON file given by `--config`; flags win. The file is either a flat
//! object of option names or holds one such object under the subcommand
//! name. Outputs go to `--out` (a directory, default `.`), and a short
//! summary is printed on stdout.
//!
//! Exit codes: 0 success, 1 I/O, 2 usage, 3 numerical or assertion
//! failure, 4 resource cap.

use crate::counterexample::{build_slow_datum, verify_slow_bound, CounterexampleError, SlowBound, SlowDatum};
use crate::graph_dirichlet::{
    dirichlet_operator, first_mode_report, positivity_improving_check, spectral_solve, GraphError, PositivityReport,
    WeightedGraph,
};
use crate::kernel::{synthesize_kernel, KernelError, KernelHeader};
use crate::lattice_core::{FracOrder, LatticeError, LatticeField, MAX_DIM};
use crate::semigroup::{dyadic_times, fit_sweep_points, sweep_point, Accuracy, FitSummary, RateReport, SemigroupError};
use crate::stable_profile::{optimality_constant, ProfileError, StableProfileEvaluator};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Failure classes, one exit code each.
#[derive(Debug)]
pub enum CliError {
    Io(String),
    Usage(String),
    Numerical(String),
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Resource(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Usage(m) | CliError::Numerical(m) | CliError::Resource(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.message())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        match e {
            LatticeError::BoxOverflow { .. } => CliError::Resource(e.to_string()),
            LatticeError::InvalidOrder(_) | LatticeError::InvalidDimension(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::Lattice(l) => l.into(),
            KernelError::BoxOverflow { .. } => CliError::Resource(e.to_string()),
            KernelError::InvalidTime(_) | KernelError::InvalidTolerance(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<SemigroupError> for CliError {
    fn from(e: SemigroupError) -> Self {
        match e {
            SemigroupError::Kernel(k) => k.into(),
            SemigroupError::TooFewPoints { .. } | SemigroupError::NotIncreasing => CliError::Usage(e.to_string()),
            SemigroupError::DegenerateSweep { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        match e {
            ProfileError::Kernel(k) => k.into(),
            ProfileError::BudgetExceeded { .. } => CliError::Resource(e.to_string()),
            ProfileError::InvalidTolerance(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<CounterexampleError> for CliError {
    fn from(e: CounterexampleError) -> Self {
        match e {
            CounterexampleError::Kernel(k) => k.into(),
            CounterexampleError::Profile(p) => p.into(),
            CounterexampleError::Semigroup(s) => s.into(),
            CounterexampleError::BoxOverflow { .. } => CliError::Resource(e.to_string()),
            CounterexampleError::InvalidLevels(_) | CounterexampleError::InvalidProfile => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Lattice(l) => l.into(),
            GraphError::Semigroup(s) => s.into(),
            GraphError::QuadratureStalled { .. } | GraphError::EigenFailure => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lattice-fracheat", version, about = "Fractional heat flow on the lattice and on graphs")]
pub struct Cli {
    /// JSON file with default option values; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesise kernel slices and write them as CSV with JSON headers.
    Kernel(KernelArgs),
    /// Rate sweeps of the rescaled error, or optimality constants.
    Rates(RatesArgs),
    /// Build and verify the slowly converging datum.
    Counterexample(CounterexampleArgs),
    /// First-mode asymptotics of a Dirichlet problem on a graph.
    Dirichlet(DirichletArgs),
    /// Positivity of the Dirichlet semigroup on a graph.
    Positivity(PositivityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMode {
    Rate,
    Optimality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Datum {
    /// `δ_{e₁}`.
    ShiftE1,
    /// `δ_{e₁} - δ_0`.
    Dipole,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelArgs {
    /// Lattice dimension, 1 to 3; default 1.
    #[arg(long)]
    pub d: Option<usize>,
    /// Order in `(0, 1]`; default 1.
    #[arg(long)]
    pub s: Option<f64>,
    /// Time grid: `x`, `a,b,c`, `2^a..2^b` or `a..b+step`; default 64.
    #[arg(long, alias = "times")]
    pub t: Option<String>,
    /// Pointwise tolerance; default 1e-10.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output directory; default `.`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; default 1.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatesArgs {
    /// Sweep kind; default `rate`.
    #[arg(long, value_enum)]
    pub mode: Option<RateMode>,
    /// Initial datum in rate mode; default `shift-e1`.
    #[arg(long, value_enum)]
    pub datum: Option<Datum>,
    /// Lattice dimension, 1 to 3; default 1.
    #[arg(long)]
    pub d: Option<usize>,
    /// Order in `(0, 1]`; default 1.
    #[arg(long)]
    pub s: Option<f64>,
    /// Comma-separated exponents in `[1, ∞]`, `inf` allowed.
    #[arg(long)]
    pub p: Option<String>,
    /// Time grid; default `2^6..2^12`.
    #[arg(long)]
    pub times: Option<String>,
    /// `peak:REL`, `abs:TOL` or `torus:C`.
    #[arg(long)]
    pub accuracy: Option<String>,
    /// Allowed deviation of each slope from `-1/(2s)`; default 0.05.
    #[arg(long)]
    pub slope_tol: Option<f64>,
    /// Compute the profile limit in optimality mode.
    #[arg(long)]
    pub limit: bool,
    /// Relative deviation allowed from the limit; default 0.02.
    #[arg(long)]
    pub limit_tol: Option<f64>,
    /// Exit 3 unless every check passes.
    #[arg(long)]
    pub assert: bool,
    /// Output format; default `csv`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output directory; default `.`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; default 1.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleArgs {
    /// `t^-A` with `A > 0`, or `1/log(e+t)`; default `t^-0.25`.
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<String>,
    /// Lattice dimension, 1 to 3; default 1.
    #[arg(long)]
    pub d: Option<usize>,
    /// Order in `(0, 1]`; default 1.
    #[arg(long)]
    pub s: Option<f64>,
    /// Number of levels; default 4.
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Exit 3 unless every level verifies.
    #[arg(long)]
    pub assert: bool,
    /// Output format; default `json`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output directory; default `.`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; default 1.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirichletArgs {
    /// JSON graph file, or `path:N`, `cycle:N`, `grid:N`.
    #[arg(long)]
    pub graph: Option<String>,
    /// `midK`, or comma-separated vertex ids; default from the graph file.
    #[arg(long)]
    pub omega: Option<String>,
    /// Order in `(0, 1]`; default 1.
    #[arg(long)]
    pub s: Option<f64>,
    /// Norm exponent of the remainder; default 2.
    #[arg(long)]
    pub p: Option<String>,
    /// Time grid; default `6..24+2`.
    #[arg(long)]
    pub times: Option<String>,
    /// Comma-separated initial values on Ω; default `1 + k/|Ω|`.
    #[arg(long, allow_hyphen_values = true)]
    pub u0: Option<String>,
    /// Relative slope tolerance for `--assert-gap`; default 0.01.
    #[arg(long)]
    pub slope_tol: Option<f64>,
    /// Exit 3 unless the slopes match the spectral gaps.
    #[arg(long)]
    pub assert_gap: bool,
    /// Output format; default `json`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output directory; default `.`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PositivityArgs {
    /// JSON graph file, or `path:N`, `cycle:N`, `grid:N`.
    #[arg(long)]
    pub graph: Option<String>,
    /// `midK`, or comma-separated vertex ids; default from the graph file.
    #[arg(long)]
    pub omega: Option<String>,
    /// Order in `(0, 1]`; default 0.5.
    #[arg(long)]
    pub s: Option<f64>,
    /// Time grid; default `0.01,1,10`.
    #[arg(long)]
    pub times: Option<String>,
    /// Exit 3 unless every entry is positive.
    #[arg(long)]
    pub assert: bool,
    /// Output format; default `json`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output directory; default `.`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! merge_from {
    ($ty:ty; $($f:ident),*; $($b:ident),*) => {
        impl $ty {
            fn merge(&mut self, mut other: Self) {
                $( if self.$f.is_none() { self.$f = other.$f.take(); } )*
                $( self.$b |= other.$b; )*
            }
        }
    };
}

merge_from!(KernelArgs; d, s, t, tol, out, jobs;);
merge_from!(RatesArgs; mode, datum, d, s, p, times, accuracy, slope_tol, limit_tol, format, out, jobs; limit, assert);
merge_from!(CounterexampleArgs; phi, d, s, kmax, format, out, jobs; assert);
merge_from!(DirichletArgs; graph, omega, s, p, times, u0, slope_tol, format, out; assert_gap);
merge_from!(PositivityArgs; graph, omega, s, times, format, out; assert);

fn load_config<T: for<'de> Deserialize<'de>>(path: &Path, section: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("config {}: {e}", path.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
    if let Some(inner) = value.get_mut(section).filter(|v| v.is_object()) {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

/// Parses a time grid: `x`, a list `x,y,z`, a dyadic range `2^a..2^b`, or
/// a linear range `a..b+step`. Entries may be written `2^k`.
pub fn parse_times(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || usage(format!("bad time grid '{spec}'"));
    let num = |x: &str| -> Result<f64, CliError> {
        let x = x.trim();
        match x.strip_prefix("2^") {
            Some(e) => e.parse::<i32>().map(|e| 2f64.powi(e)).map_err(|_| bad()),
            None => x.parse::<f64>().map_err(|_| bad()),
        }
    };
    let times = if let Some((lo, hi)) = spec.split_once("..") {
        if let (Some(a), Some(b)) = (lo.trim().strip_prefix("2^"), hi.trim().strip_prefix("2^")) {
            let (a, b) = (a.parse::<i32>().map_err(|_| bad())?, b.parse::<i32>().map_err(|_| bad())?);
            if a > b {
                return Err(bad());
            }
            dyadic_times(a, b)
        } else {
            let (hi, step) = hi.split_once('+').ok_or_else(bad)?;
            let (a, b, h) = (num(lo)?, num(hi)?, num(step)?);
            if !(h > 0.0 && b >= a) {
                return Err(bad());
            }
            let n = ((b - a) / h + 1e-9).floor() as usize;
            (0..=n).map(|k| a + k as f64 * h).collect()
        }
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if times.is_empty() || times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(usage(format!("times must be finite and non-negative in '{spec}'")));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(usage(format!("times must be strictly increasing in '{spec}'")));
    }
    Ok(times)
}

/// Comma-separated exponents in `[1, ∞]`.
pub fn parse_exponents(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|x| {
            let x = x.trim();
            let p = if matches!(x, "inf" | "infinity") { f64::INFINITY } else { x.parse::<f64>().map_err(|_| usage(format!("bad exponent '{x}'")))? };
            if p >= 1.0 {
                Ok(p)
            } else {
                Err(usage(format!("exponent {x} outside [1, inf]")))
            }
        })
        .collect()
}

fn p_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

fn parse_accuracy(spec: &str) -> Result<Accuracy, CliError> {
    let bad = || usage(format!("bad accuracy '{spec}', expected peak:REL, abs:TOL or torus:C"));
    let (kind, v) = spec.split_once(':').ok_or_else(bad)?;
    let v: f64 = v.parse().map_err(|_| bad())?;
    if !(v.is_finite() && v > 0.0) {
        return Err(bad());
    }
    match kind {
        "peak" => Ok(Accuracy::PeakRelative(v)),
        "abs" => Ok(Accuracy::Absolute(v)),
        "torus" => Ok(Accuracy::SelfSimilarTorus(v)),
        _ => Err(bad()),
    }
}

/// The decay profile named by `spec`.
pub fn parse_profile(spec: &str) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync>, CliError> {
    let compact: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
    if matches!(compact.as_str(), "1/log(e+t)" | "inv-log") {
        return Ok(Box::new(|t: f64| 1.0 / (std::f64::consts::E + t).ln()));
    }
    let a: f64 = compact
        .strip_prefix("t^-")
        .and_then(|a| a.parse().ok())
        .filter(|a: &f64| a.is_finite() && *a > 0.0)
        .ok_or_else(|| usage(format!("bad profile '{spec}', expected t^-A or 1/log(e+t)")))?;
    Ok(Box::new(move |t: f64| t.powf(-a)))
}

fn check_d(d: usize) -> Result<usize, CliError> {
    if (1..=MAX_DIM).contains(&d) {
        Ok(d)
    } else {
        Err(usage(format!("dimension {d} unsupported (expected 1..={MAX_DIM})")))
    }
}

fn check_s(s: f64) -> Result<FracOrder, CliError> {
    FracOrder::new(s).map_err(|e| usage(e.to_string()))
}

fn check_jobs(jobs: Option<usize>) -> Result<usize, CliError> {
    match jobs.unwrap_or(1) {
        0 => Err(usage("--jobs must be at least 1")),
        j => Ok(j),
    }
}

/// Ordered map over `items` on at most `jobs` scoped threads.
pub fn par_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(items.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.expect("worker result")).collect()
}

fn out_dir(out: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn tag(x: f64) -> String {
    format!("{x}").replace('.', "p")
}

/// Runs `argv` and returns the exit code.
pub fn run_from<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Kernel(mut a) => {
            if let Some(p) = config {
                a.merge(load_config(p, "kernel")?);
            }
            cmd_kernel(&a)
        }
        Command::Rates(mut a) => {
            if let Some(p) = config {
                a.merge(load_config(p, "rates")?);
            }
            cmd_rates(&a)
        }
        Command::Counterexample(mut a) => {
            if let Some(p) = config {
                a.merge(load_config(p, "counterexample")?);
            }
            cmd_counterexample(&a)
        }
        Command::Dirichlet(mut a) => {
            if let Some(p) = config {
                a.merge(load_config(p, "dirichlet")?);
            }
            cmd_dirichlet(&a)
        }
        Command::Positivity(mut a) => {
            if let Some(p) = config {
                a.merge(load_config(p, "positivity")?);
            }
            cmd_positivity(&a)
        }
    }
}

#[derive(Debug, Serialize)]
struct KernelRecord {
    #[serde(flatten)]
    header: KernelHeader,
    tol: f64,
    mass: f64,
    min_value: f64,
    csv: String,
}

pub fn cmd_kernel(a: &KernelArgs) -> Result<(), CliError> {
    let d = check_d(a.d.unwrap_or(1))?;
    let s = check_s(a.s.unwrap_or(1.0))?;
    let times = parse_times(a.t.as_deref().unwrap_or("64"))?;
    if times.contains(&0.0) {
        return Err(usage("kernel times must be positive"));
    }
    let tol = a.tol.unwrap_or(1e-10);
    if !(tol > 1e-14 && tol < 1e-2) {
        return Err(usage(format!("tolerance {tol} outside (1e-14, 1e-2)")));
    }
    let jobs = check_jobs(a.jobs)?;
    let dir = out_dir(&a.out)?;
    let results = par_map(&times, jobs, |&t| synthesize_kernel(t, s, d, tol));
    for (t, r) in times.iter().zip(results) {
        let k = r?;
        let stem = format!("kernel_d{d}_s{}_t{}", tag(s.value()), tag(*t));
        let csv = dir.join(format!("{stem}.csv"));
        let mut w = create(&csv)?;
        k.write_csv(&mut w)?;
        w.flush()?;
        let rec = KernelRecord {
            header: k.header(),
            tol,
            mass: k.mass(),
            min_value: k.min_value(),
            csv: format!("{stem}.csv"),
        };
        write_json(&dir.join(format!("{stem}.json")), &rec)?;
        println!(
            "t {t}: N {} L {} mass {:.15} min {:.3e} aliasing {:.2e} -> {}",
            k.grid_n,
            k.radius(),
            rec.mass,
            rec.min_value,
            k.aliasing_estimate,
            csv.display()
        );
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct RateRecord {
    p: String,
    expected_slope: f64,
    #[serde(flatten)]
    fit: FitSummary,
    times: Vec<f64>,
    raw: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct RatesOutput {
    mode: RateMode,
    d: usize,
    s: f64,
    accuracy: Accuracy,
    reports: Vec<RateRecord>,
}

#[derive(Debug, Serialize)]
struct OptimalityOutput {
    mode: RateMode,
    d: usize,
    s: f64,
    p: String,
    times: Vec<f64>,
    constants: Vec<f64>,
    converged: f64,
    limit: Option<f64>,
}

/// Accuracy used when none is given: the self-similar torus for
/// heavy-tailed kernels in `d >= 2`, peak-relative `1e-4` otherwise.
pub fn default_accuracy(d: usize, s: FracOrder) -> Accuracy {
    if d >= 2 && !s.is_local() {
        Accuracy::SelfSimilarTorus(1.0)
    } else {
        Accuracy::PeakRelative(1e-4)
    }
}

fn initial_datum(datum: Datum, d: usize) -> Result<LatticeField, CliError> {
    let mut e1 = [0i64; MAX_DIM];
    e1[0] = 1;
    let mut u = LatticeField::delta(d, &e1[..d], 0)?;
    if datum == Datum::Dipole {
        u.set(&[0; MAX_DIM][..d], -1.0);
    }
    Ok(u)
}

pub fn cmd_rates(a: &RatesArgs) -> Result<(), CliError> {
    let d = check_d(a.d.unwrap_or(1))?;
    let s = check_s(a.s.unwrap_or(1.0))?;
    let mode = a.mode.unwrap_or(RateMode::Rate);
    let times = parse_times(a.times.as_deref().unwrap_or("2^6..2^12"))?;
    if times.len() < crate::semigroup::MIN_SWEEP_POINTS && mode == RateMode::Rate {
        return Err(usage(format!("a rate fit needs at least {} times, got {}", crate::semigroup::MIN_SWEEP_POINTS, times.len())));
    }
    if times.contains(&0.0) {
        return Err(usage("sweep times must be positive"));
    }
    let jobs = check_jobs(a.jobs)?;
    let dir = out_dir(&a.out)?;
    let format = a.format.unwrap_or(Format::Csv);
    match mode {
        RateMode::Rate => {
            let ps = parse_exponents(a.p.as_deref().unwrap_or("1,2,inf"))?;
            let acc = match &a.accuracy {
                Some(spec) => parse_accuracy(spec)?,
                None => default_accuracy(d, s),
            };
            let slope_tol = a.slope_tol.unwrap_or(0.05);
            let u0 = initial_datum(a.datum.unwrap_or(Datum::ShiftE1), d)?;
            let points = par_map(&times, jobs, |&t| sweep_point(&u0, s, &ps, t, acc))
                .into_iter()
                .collect::<Result<Vec<_>, _>>()?;
            let reports = fit_sweep_points(&times, &points)?;
            let expected = -1.0 / (2.0 * s.value());
            let stem = format!("rates_d{d}_s{}", tag(s.value()));
            let mut ok = true;
            let mut records = Vec::new();
            for (p, r) in ps.iter().zip(reports) {
                let pass = (r.slope - expected).abs() <= slope_tol;
                ok &= pass;
                println!(
                    "p {}: slope {:.4} (expected {expected:.4}) intercept {:.4} max residual {:.3e}{}",
                    p_label(*p),
                    r.slope,
                    r.intercept,
                    r.max_residual,
                    if r.preasymptotic { " preasymptotic" } else { "" }
                );
                if format == Format::Csv {
                    let path = dir.join(format!("{stem}_p{}.csv", p_label(*p)));
                    let mut w = create(&path)?;
                    write_rate_csv(&mut w, &r)?;
                    w.flush()?;
                }
                records.push(RateRecord {
                    p: p_label(*p),
                    expected_slope: expected,
                    fit: r.summary(),
                    times: r.times,
                    raw: r.raw,
                    values: r.values,
                });
            }
            if format == Format::Json {
                let out = RatesOutput { mode, d, s: s.value(), accuracy: acc, reports: records };
                write_json(&dir.join(format!("{stem}.json")), &out)?;
            }
            if a.assert && !ok {
                return Err(CliError::Numerical(format!("a slope deviates from {expected} by more than {slope_tol}")));
            }
            Ok(())
        }
        RateMode::Optimality => {
            let ps = parse_exponents(a.p.as_deref().unwrap_or("1"))?;
            let [p] = ps[..] else {
                return Err(usage("optimality mode takes a single exponent"));
            };
            let constants = par_map(&times, jobs, |&t| optimality_constant(t, s, d, p, 1e-4))
                .into_iter()
                .collect::<Result<Vec<_>, _>>()?;
            let converged = *constants.last().expect("non-empty grid");
            let limit = if a.limit || a.assert { Some(profile_limit(s, d, p)?) } else { None };
            for (t, c) in times.iter().zip(&constants) {
                println!("t {t}: constant {c:.6}");
            }
            println!("converged constant {converged:.6}");
            let stem = format!("optimality_d{d}_s{}_p{}", tag(s.value()), p_label(p));
            match format {
                Format::Csv => {
                    let mut w = create(&dir.join(format!("{stem}.csv")))?;
                    writeln!(w, "t,constant")?;
                    for (t, c) in times.iter().zip(&constants) {
                        writeln!(w, "{t},{c}")?;
                    }
                    w.flush()?;
                }
                Format::Json => {
                    let out = OptimalityOutput {
                        mode,
                        d,
                        s: s.value(),
                        p: p_label(p),
                        times: times.clone(),
                        constants: constants.clone(),
                        converged,
                        limit,
                    };
                    write_json(&dir.join(format!("{stem}.json")), &out)?;
                }
            }
            if let Some(l) = limit {
                let rel = (converged / l - 1.0).abs();
                println!("profile limit {l:.6}, relative deviation {rel:.2e}");
                let lt = a.limit_tol.unwrap_or(0.02);
                if a.assert && rel > lt {
                    return Err(CliError::Numerical(format!("constant deviates from the limit by {rel:.3e} > {lt}")));
                }
            }
            Ok(())
        }
    }
}

fn write_rate_csv<W: Write>(w: &mut W, r: &RateReport) -> Result<(), CliError> {
    r.write_csv(&mut *w)?;
    Ok(())
}

/// `‖∂₁Φ_s‖_p` by a Riemann sum on a truncated grid, good to about 0.1%.
fn profile_limit(s: FracOrder, d: usize, p: f64) -> Result<f64, CliError> {
    let ev = StableProfileEvaluator::new(s, d, 1e-6)?;
    let radius = if d == 1 { 100.0 } else { 8.0 };
    Ok(ev.derivative_norm(p, radius, 0.05))
}

#[derive(Debug, Serialize)]
struct CounterexampleOutput {
    phi: String,
    datum: SlowDatum,
    partial_first_moment: f64,
    bounds: Vec<SlowBound>,
    all_pass: bool,
}

pub fn cmd_counterexample(a: &CounterexampleArgs) -> Result<(), CliError> {
    let d = check_d(a.d.unwrap_or(1))?;
    let s = check_s(a.s.unwrap_or(1.0))?;
    let kmax = a.kmax.unwrap_or(4);
    let phi_spec = a.phi.clone().unwrap_or_else(|| "t^-0.25".into());
    let phi = parse_profile(&phi_spec)?;
    let jobs = check_jobs(a.jobs)?;
    let dir = out_dir(&a.out)?;
    let sd = build_slow_datum(&phi, s, d, kmax)?;
    println!(
        "rho* {:.4} c* {:.6} T* {} delta {} truncated mass {:.3e}",
        sd.rho_star, sd.c_star, sd.t_star, sd.delta, sd.truncated_mass
    );
    let levels: Vec<usize> = (1..=sd.levels()).collect();
    let bounds = par_map(&levels, jobs, |&k| verify_slow_bound(&sd, k, &phi))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    for (b, x) in bounds.iter().zip(&sd.sites) {
        println!(
            "k {}: t {:e} x {:?} lhs {:.4e} rhs {:.4e} {}",
            b.k,
            b.t,
            x,
            b.lhs,
            b.rhs,
            if b.pass { "pass" } else { "FAIL" }
        );
    }
    let all_pass = bounds.iter().all(|b| b.pass);
    let stem = format!("counterexample_d{d}_s{}_k{kmax}", tag(s.value()));
    match a.format.unwrap_or(Format::Json) {
        Format::Json => {
            let out = CounterexampleOutput {
                phi: phi_spec,
                partial_first_moment: sd.partial_first_moment(),
                datum: sd.clone(),
                bounds: bounds.clone(),
                all_pass,
            };
            write_json(&dir.join(format!("{stem}.json")), &out)?;
        }
        Format::Csv => {
            let mut w = create(&dir.join(format!("{stem}.csv")))?;
            writeln!(w, "k,t,x1,mass,lhs,rhs,pass")?;
            for ((b, x), m) in bounds.iter().zip(&sd.sites).zip(&sd.masses) {
                writeln!(w, "{},{},{},{},{},{},{}", b.k, b.t, x[0], m, b.lhs, b.rhs, b.pass)?;
            }
            w.flush()?;
        }
    }
    if a.assert && !all_pass {
        return Err(CliError::Numerical("a level bound failed".into()));
    }
    Ok(())
}

/// Graph from a JSON file or a built-in family `path:N`, `cycle:N`, `grid:N`.
pub fn load_graph(spec: &str) -> Result<(WeightedGraph, Vec<usize>), CliError> {
    if let Some((family, n)) = spec.split_once(':') {
        if let Ok(n) = n.parse::<usize>() {
            let g = match family {
                "path" if n >= 2 => WeightedGraph::path(n),
                "cycle" if n >= 3 => WeightedGraph::cycle(n),
                "grid" if n >= 2 => WeightedGraph::grid_box(n),
                _ => return Err(usage(format!("bad graph family '{spec}'"))),
            };
            return Ok((g, Vec::new()));
        }
    }
    let text = std::fs::read_to_string(spec).map_err(|e| CliError::Io(format!("graph {spec}: {e}")))?;
    Ok(WeightedGraph::from_json(&text)?)
}

/// `midK` picks `K` consecutive vertices centred in index order; otherwise
/// a comma-separated list of vertex ids.
pub fn select_omega(g: &WeightedGraph, spec: Option<&str>, from_file: Vec<usize>) -> Result<Vec<usize>, CliError> {
    let Some(spec) = spec else {
        if from_file.is_empty() {
            return Err(usage("no Ω given: pass --omega or list omega in the graph file"));
        }
        return Ok(from_file);
    };
    if let Some(k) = spec.strip_prefix("mid").and_then(|k| k.parse::<usize>().ok()) {
        if k == 0 || k > g.n() {
            return Err(usage(format!("'{spec}' does not fit a graph of {} vertices", g.n())));
        }
        let start = (g.n() - k) / 2;
        return Ok((start..start + k).collect());
    }
    spec.split(',')
        .map(|id| {
            let id = id.trim();
            g.ids().iter().position(|x| x == id).ok_or_else(|| usage(format!("vertex {id} is unknown")))
        })
        .collect()
}

fn parse_values(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| usage(format!("bad value '{x}'"))))
        .collect()
}

#[derive(Debug, Serialize)]
struct DirichletOutput {
    s: f64,
    omega: Vec<String>,
    eigenvalues: Vec<f64>,
    mu1: f64,
    mu2: f64,
    gap: f64,
    p: String,
    remainder: FitSummary,
    renormalized: Option<FitSummary>,
    l2_ratio_max: f64,
    times: Vec<f64>,
    remainder_norms: Vec<f64>,
    renormalized_norms: Option<Vec<f64>>,
    warnings: Vec<String>,
}

pub fn cmd_dirichlet(a: &DirichletArgs) -> Result<(), CliError> {
    let (g, file_omega) = load_graph(a.graph.as_deref().ok_or_else(|| usage("--graph is required"))?)?;
    let omega = select_omega(&g, a.omega.as_deref(), file_omega)?;
    let s = check_s(a.s.unwrap_or(1.0))?;
    let [p] = parse_exponents(a.p.as_deref().unwrap_or("2"))?[..] else {
        return Err(usage("dirichlet takes a single exponent"));
    };
    let times = parse_times(a.times.as_deref().unwrap_or("6..24+2"))?;
    let op = dirichlet_operator(&g, &omega, s)?;
    let spec = spectral_solve(&op)?;
    if spec.eigenvalues.len() < 2 {
        return Err(usage("Ω needs at least two vertices for a spectral gap"));
    }
    let m = omega.len();
    let u0 = match &a.u0 {
        Some(v) => parse_values(v)?,
        None => (0..m).map(|k| 1.0 + k as f64 / m as f64).collect(),
    };
    let rep = first_mode_report(&op, &spec, &u0, p, &times)?;
    for w in &op.warnings {
        eprintln!("warning: {w}");
    }
    println!("eigenvalues {:?}", spec.eigenvalues);
    println!(
        "mu1 {:.10} mu2 {:.10} gap {:.10}; remainder slope {:.6} (-mu2 = {:.6})",
        rep.mu1,
        rep.mu2,
        spec.gap(),
        rep.remainder.slope,
        -rep.mu2
    );
    if let Some(r) = &rep.renormalized {
        println!("renormalized slope {:.6} (-(mu2 - mu1) = {:.6})", r.slope, -(rep.mu2 - rep.mu1));
    }
    println!("l2 ratio max {:.12}", rep.l2_ratio_max);
    let stem = format!("dirichlet_s{}", tag(s.value()));
    let dir = out_dir(&a.out)?;
    match a.format.unwrap_or(Format::Json) {
        Format::Json => {
            let out = DirichletOutput {
                s: s.value(),
                omega: omega.iter().map(|&x| g.ids()[x].clone()).collect(),
                eigenvalues: spec.eigenvalues.clone(),
                mu1: rep.mu1,
                mu2: rep.mu2,
                gap: spec.gap(),
                p: p_label(p),
                remainder: rep.remainder.summary(),
                renormalized: rep.renormalized.as_ref().map(RateReport::summary),
                l2_ratio_max: rep.l2_ratio_max,
                times: times.clone(),
                remainder_norms: rep.remainder.raw.clone(),
                renormalized_norms: rep.renormalized.as_ref().map(|r| r.raw.clone()),
                warnings: op.warnings.clone(),
            };
            write_json(&dir.join(format!("{stem}.json")), &out)?;
        }
        Format::Csv => {
            let mut w = create(&dir.join(format!("{stem}.csv")))?;
            writeln!(w, "t,remainder,renormalized")?;
            for (i, t) in times.iter().enumerate() {
                let ren = rep.renormalized.as_ref().map_or(String::new(), |r| r.raw[i].to_string());
                writeln!(w, "{t},{},{ren}", rep.remainder.raw[i])?;
            }
            w.flush()?;
        }
    }
    if a.assert_gap {
        let tol = a.slope_tol.unwrap_or(0.01);
        let mut failures = Vec::new();
        if (rep.remainder.slope / -rep.mu2 - 1.0).abs() > tol {
            failures.push(format!("remainder slope {} vs {}", rep.remainder.slope, -rep.mu2));
        }
        if let Some(r) = &rep.renormalized {
            if (r.slope / -(rep.mu2 - rep.mu1) - 1.0).abs() > tol {
                failures.push(format!("renormalized slope {} vs {}", r.slope, -(rep.mu2 - rep.mu1)));
            }
        }
        if rep.l2_ratio_max > 1.0 + 1e-10 {
            failures.push(format!("l2 ratio {}", rep.l2_ratio_max));
        }
        if !failures.is_empty() {
            return Err(CliError::Numerical(failures.join("; ")));
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct PositivityOutput {
    s: f64,
    omega: Vec<String>,
    #[serde(flatten)]
    report: PositivityReport,
    warnings: Vec<String>,
}

pub fn cmd_positivity(a: &PositivityArgs) -> Result<(), CliError> {
    let (g, file_omega) = load_graph(a.graph.as_deref().ok_or_else(|| usage("--graph is required"))?)?;
    let omega = select_omega(&g, a.omega.as_deref(), file_omega)?;
    let s = check_s(a.s.unwrap_or(0.5))?;
    let times = parse_times(a.times.as_deref().unwrap_or("0.01,1,10"))?;
    let op = dirichlet_operator(&g, &omega, s)?;
    let rep = positivity_improving_check(&op, &times);
    for w in &op.warnings {
        eprintln!("warning: {w}");
    }
    for (t, m) in rep.times.iter().zip(&rep.min_entries) {
        println!("t {t}: min entry {m:.6e}");
    }
    println!(
        "min entry {:.6e}; metzler {} irreducible {} off-diagonals negative {} positive {}",
        rep.min_entry, rep.metzler, rep.irreducible, rep.complete_pattern, rep.positive
    );
    let stem = format!("positivity_s{}", tag(s.value()));
    let dir = out_dir(&a.out)?;
    match a.format.unwrap_or(Format::Json) {
        Format::Json => {
            let out = PositivityOutput {
                s: s.value(),
                omega: omega.iter().map(|&x| g.ids()[x].clone()).collect(),
                report: rep.clone(),
                warnings: op.warnings.clone(),
            };
            write_json(&dir.join(format!("{stem}.json")), &out)?;
        }
        Format::Csv => {
            let mut w = create(&dir.join(format!("{stem}.csv")))?;
            writeln!(w, "t,min_entry")?;
            for (t, m) in rep.times.iter().zip(&rep.min_entries) {
                writeln!(w, "{t},{m}")?;
            }
            w.flush()?;
        }
    }
    if a.assert && !rep.positive {
        return Err(CliError::Numerical(format!("semigroup has a non-positive entry {:.3e}", rep.min_entry)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_grids() {
        assert_eq!(parse_times("2^2..2^4").unwrap(), vec![4.0, 8.0, 16.0]);
        assert_eq!(parse_times("6..10+2").unwrap(), vec![6.0, 8.0, 10.0]);
        assert_eq!(parse_times("0.01, 1,10").unwrap(), vec![0.01, 1.0, 10.0]);
        assert_eq!(parse_times("2^3").unwrap(), vec![8.0]);
        assert!(parse_times("4,2").is_err());
        assert!(parse_times("x").is_err());
        assert!(parse_times("2^4..2^2").is_err());
    }

    #[test]
    fn exponents_and_profiles() {
        assert_eq!(parse_exponents("1, 2,inf").unwrap(), vec![1.0, 2.0, f64::INFINITY]);
        assert!(parse_exponents("0.5").is_err());
        let phi = parse_profile("t^-0.25").unwrap();
        assert!((phi(16.0) - 0.5).abs() < 1e-15);
        let log = parse_profile("1/log(e + t)").unwrap();
        assert!((log(0.0) - 1.0).abs() < 1e-15);
        assert!(parse_profile("t^0.5").is_err());
    }

    #[test]
    fn ordered_parallel_map() {
        let xs: Vec<u64> = (0..50).collect();
        assert_eq!(par_map(&xs, 4, |x| x * x), xs.iter().map(|x| x * x).collect::<Vec<_>>());
    }

    #[test]
    fn flags_win_over_config() {
        let mut a = KernelArgs { d: Some(2), ..Default::default() };
        a.merge(serde_json::from_str(r#"{"d": 1, "s": 0.5, "tol": 1e-9}"#).unwrap());
        assert_eq!((a.d, a.s, a.tol), (Some(2), Some(0.5), Some(1e-9)));
        assert!(serde_json::from_str::<KernelArgs>(r#"{"dd": 1}"#).is_err());
    }

    #[test]
    fn omega_selection() {
        let g = WeightedGraph::path(5);
        assert_eq!(select_omega(&g, Some("mid3"), vec![]).unwrap(), vec![1, 2, 3]);
        assert_eq!(select_omega(&g, Some("0,4"), vec![]).unwrap(), vec![0, 4]);
        assert!(select_omega(&g, None, vec![]).is_err());
        assert!(select_omega(&g, Some("mid9"), vec![]).is_err());
    }
}
