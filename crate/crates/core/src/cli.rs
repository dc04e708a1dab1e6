//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O, parse or invalid input, 2 non-converged fit,
//! 3 identifiability failure, 4 numerical failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{self, designs, ContaminationKind, ContaminationSpec, Estimator, StudyOptions};
use crate::data::{DataShape, Observations};
use crate::error::{Error, Result};
use crate::gmwm::{self, FitOptions, FitResult, Flavor, JTestResult, OmegaKind, DEFAULT_EFFICIENCY};
use crate::io;
use crate::models::{theoretical_wv, ModelSpec};
use crate::wv::{self, CovarianceMethod, WvEstimate, WvMethod};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "RGMWM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "rgmwm", version, about = "Robust generalized method of wavelet moments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model to a time series or lattice.
    Fit(FitArgs),
    /// Simulate data from a fully specified model.
    Simulate(SimulateArgs),
    /// Add outliers to a data file.
    Contaminate(ContaminateArgs),
    /// Export classical and robust wavelet variances with intervals.
    Wv(WvArgs),
    /// Run a Monte Carlo study on one or all simulation designs.
    Benchmark(BenchmarkArgs),
    /// Bootstrap J-test of model adequacy.
    Jtest(JtestArgs),
}

#[derive(Debug, Args)]
struct EstimatorArgs {
    /// Use the robust (Tukey) wavelet-variance estimator.
    #[arg(long)]
    robust: bool,
    /// Asymptotic efficiency of the robust estimator; implies --robust.
    #[arg(long)]
    efficiency: Option<f64>,
    /// Weighting matrix: identity, diag or full.
    #[arg(long, default_value = "diag")]
    omega: String,
    /// Confidence level of the intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
}

impl EstimatorArgs {
    fn flavor(&self) -> Flavor {
        match (self.robust, self.efficiency) {
            (_, Some(efficiency)) => Flavor::Robust { efficiency },
            (true, None) => Flavor::Robust { efficiency: DEFAULT_EFFICIENCY },
            (false, None) => Flavor::Classical,
        }
    }

    fn options(&self) -> Result<FitOptions> {
        Ok(FitOptions {
            flavor: self.flavor(),
            omega: self.omega.parse::<OmegaKind>()?,
            level: self.level,
            ..FitOptions::default()
        })
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    /// Model, e.g. `sum(ar1(rho=?,v2=?),wn(s2=?))`, or `@file` holding one.
    #[arg(long)]
    model: String,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Bootstrap replicates for a J-test (needs --seed).
    #[arg(long)]
    boot: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    model: String,
    /// Series length.
    #[arg(long, conflicts_with_all = ["rows", "cols"])]
    n: Option<usize>,
    #[arg(long, requires = "cols")]
    rows: Option<usize>,
    #[arg(long, requires = "rows")]
    cols: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct ContaminateArgs {
    #[arg(long)]
    input: PathBuf,
    /// isolated, replace, patchy[:len], scale:j or level-shift:m1,m2,...
    #[arg(long)]
    kind: String,
    #[arg(long)]
    epsilon: f64,
    /// Variance of the contaminating noise.
    #[arg(long, default_value_t = 0.0)]
    sigma2: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: PathBuf,
    /// Affected indices; defaults to `<output>.indices.csv`.
    #[arg(long)]
    indices: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct WvArgs {
    #[arg(long)]
    input: PathBuf,
    /// Model whose implied wavelet variance is added (fitted when it has free parameters).
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    efficiency: Option<f64>,
    #[arg(long, default_value = "diag")]
    omega: String,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    /// Design name (e.g. `ar1`, `arma12`, `exp1`) or `all`.
    #[arg(long, default_value = "all")]
    design: String,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Run without contamination.
    #[arg(long)]
    clean: bool,
    /// Per-parameter CSV report.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct JtestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    model: String,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, default_value_t = 99)]
    boot: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Sizes the global worker pool from [`THREADS_ENV`] when it is set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::invalid(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::invalid(e.to_string()))
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a, out),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Contaminate(a) => cmd_contaminate(a),
        Command::Wv(a) => cmd_wv(a, out),
        Command::Benchmark(a) => cmd_benchmark(a, out),
        Command::Jtest(a) => cmd_jtest(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn require_seed(seed: Option<u64>, command: &str) -> Result<u64> {
    seed.ok_or_else(|| Error::invalid(format!("`{command}` is stochastic and needs --seed")))
}

fn parse_model(spec: &str) -> Result<ModelSpec> {
    match spec.strip_prefix('@') {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
            text.trim().parse()
        }
        None => spec.parse(),
    }
}

fn emit(output: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match output {
        Some(p) => io::write_text(p, text),
        None => out.write_all(text.as_bytes()).map_err(Error::from),
    }
}

fn flavor_label(flavor: Flavor) -> String {
    match flavor {
        Flavor::Classical => "GMWM".into(),
        Flavor::Robust { efficiency } => format!("RGMWM (efficiency {efficiency})"),
    }
}

/// Text report of a fit: a header block, a parameter table and, for robust
/// fits, the flagged observations.
pub fn fit_report(fit: &FitResult, n: usize, jtest: Option<&JTestResult>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# model: {}", fit.model);
    let _ = writeln!(s, "# estimator: {}", flavor_label(fit.flavor));
    let _ = writeln!(s, "# omega: {}", fit.omega.kind);
    let _ = writeln!(s, "# observations: {n}");
    let _ = writeln!(s, "# scales: {}", fit.wv.num_scales());
    let _ = writeln!(s, "# converged: {}", fit.converged);
    if fit.at_bound {
        let _ = writeln!(s, "# at_bound: true");
    }
    let _ = writeln!(s, "# objective: {}", io::format_value(fit.objective));
    if let Some(j) = jtest {
        let _ = writeln!(s, "# jtest_statistic: {}", io::format_value(j.statistic));
        let _ = writeln!(s, "# jtest_p_value: {}", j.p_value);
        let _ = writeln!(s, "# jtest_replicates: {} ({} failed)", j.replicates, j.failures);
    }
    let _ = writeln!(s, "parameter,estimate,ci_lo,ci_hi");
    for (i, label) in fit.labels.iter().enumerate() {
        let (lo, hi) =
            fit.ci.as_ref().map(|c| (io::format_value(c[i].0), io::format_value(c[i].1))).unwrap_or_default();
        let _ = writeln!(s, "{label},{},{lo},{hi}", io::format_value(fit.theta_hat[i]));
    }
    if let Some(w) = &fit.weights {
        let _ = writeln!(s, "# flagged: {}", w.flagged.len());
        let _ = writeln!(s, "index,weight");
        for &i in &w.flagged {
            let _ = writeln!(s, "{i},{}", io::format_value(w.weights[i]));
        }
    }
    s
}

fn cmd_fit(a: FitArgs, out: &mut dyn Write) -> Result<i32> {
    let data = io::read_observations(&a.input)?;
    let model = parse_model(&a.model)?;
    let options = a.estimator.options()?;
    let seed = a.boot.map(|_| require_seed(a.seed, "fit --boot")).transpose()?;
    let fit = gmwm::fit(&data, &model, &options)?;
    let jtest = match (a.boot, seed) {
        (Some(b), Some(seed)) if fit.converged => {
            Some(gmwm::jtest_bootstrap(&fit, &model, DataShape::of(&data), b, &options, seed)?)
        }
        _ => None,
    };
    emit(a.output.as_deref(), &fit_report(&fit, data.len(), jtest.as_ref()), out)?;
    Ok(if fit.converged { 0 } else { 2 })
}

fn cmd_simulate(a: SimulateArgs) -> Result<i32> {
    let seed = require_seed(a.seed, "simulate")?;
    let model = parse_model(&a.model)?;
    let shape = match (a.n, a.rows, a.cols) {
        (Some(n), None, None) => DataShape::Series(n),
        (None, Some(r), Some(c)) => DataShape::Field(r, c),
        _ => return Err(Error::invalid("give either --n or both --rows and --cols")),
    };
    let data = model.simulate(shape, seed)?;
    io::write_observations(&a.output, &data)?;
    Ok(0)
}

fn cmd_contaminate(a: ContaminateArgs) -> Result<i32> {
    let seed = require_seed(a.seed, "contaminate")?;
    let data = io::read_observations(&a.input)?;
    let kind: ContaminationKind = a.kind.parse()?;
    let spec = ContaminationSpec::new(kind, a.epsilon, a.sigma2, seed)?;
    let (dirty, indices) = bench::contaminate(&data, &spec)?;
    let sidecar = a.indices.unwrap_or_else(|| {
        let mut p = a.output.clone().into_os_string();
        p.push(".indices.csv");
        p.into()
    });
    io::write_observations(&a.output, &dirty)?;
    io::write_text(sidecar, &io::indices_to_csv(&indices))?;
    Ok(0)
}

/// Wavelet variance with its covariance and intervals.
fn wv_with_intervals(data: &Observations, method: WvMethod, level: f64) -> Result<(WvEstimate, Vec<(f64, f64)>)> {
    let blocks = wv::decompose(data)?;
    let mut est = wv::estimate_blocks(&blocks, method)?;
    est.v_hat = Some(wv::estimate_v(&blocks, &est, &CovarianceMethod::default())?);
    let ci = wv::wv_confidence_intervals(&est, level)?;
    Ok((est, ci))
}

fn implied(data: &Observations, model: &ModelSpec, est: &WvEstimate, options: &FitOptions) -> Result<Vec<f64>> {
    if model.num_free() == 0 {
        return Ok(theoretical_wv(model, &est.scales)?.nu);
    }
    let fit = gmwm::fit(data, model, options)?;
    Ok(theoretical_wv(&fit.model, &est.scales)?.nu)
}

fn cmd_wv(a: WvArgs, out: &mut dyn Write) -> Result<i32> {
    let data = io::read_observations(&a.input)?;
    let efficiency = a.efficiency.unwrap_or(DEFAULT_EFFICIENCY);
    let (cl, cl_ci) = wv_with_intervals(&data, WvMethod::Classical, a.level)?;
    let (rb, rb_ci) = wv_with_intervals(&data, WvMethod::robust(efficiency)?, a.level)?;
    let curves = match &a.model {
        Some(spec) => {
            let model = parse_model(spec)?;
            let omega: OmegaKind = a.omega.parse()?;
            let base = FitOptions { omega, level: a.level, inference: false, ..FitOptions::default() };
            let c = implied(&data, &model, &cl, &FitOptions { flavor: Flavor::Classical, ..base.clone() })?;
            let r = implied(&data, &model, &rb, &FitOptions { flavor: Flavor::Robust { efficiency }, ..base })?;
            Some((c, r))
        }
        None => None,
    };
    let f = io::format_value;
    let mut s = String::from("scale,nu_classical,ci_lo_classical,ci_hi_classical,nu_robust,ci_lo_robust,ci_hi_robust");
    if curves.is_some() {
        s.push_str(",nu_implied_classical,nu_implied_robust");
    }
    s.push('\n');
    for k in 0..cl.num_scales() {
        let _ = write!(
            s,
            "{},{},{},{},{},{},{}",
            cl.scales[k],
            f(cl.nu_hat[k]),
            f(cl_ci[k].0),
            f(cl_ci[k].1),
            f(rb.nu_hat[k]),
            f(rb_ci[k].0),
            f(rb_ci[k].1)
        );
        if let Some((c, r)) = &curves {
            let _ = write!(s, ",{},{}", f(c[k]), f(r[k]));
        }
        s.push('\n');
    }
    emit(a.output.as_deref(), &s, out)?;
    Ok(0)
}

fn cmd_benchmark(a: BenchmarkArgs, out: &mut dyn Write) -> Result<i32> {
    let seed = require_seed(a.seed, "benchmark")?;
    let list = if a.design.eq_ignore_ascii_case("all") { designs::all() } else { vec![designs::by_name(&a.design)?] };
    let options = StudyOptions { replicates: a.replicates, seed, contaminated: !a.clean, ..StudyOptions::default() };
    let mut csv = String::from(bench::StudyReport::CSV_HEADER);
    csv.push('\n');
    let mut text = String::new();
    for d in &list {
        let report = bench::run_study(d, &Estimator::defaults(), &options)?;
        report.write_csv_rows(&mut csv);
        let _ = writeln!(text, "{} ({}, R = {})", d.name, if a.clean { "clean" } else { "contaminated" }, a.replicates);
        text.push_str(&report.summary_table());
        text.push_str(&report.rmse_table());
        text.push('\n');
    }
    if let Some(p) = &a.output {
        io::write_text(p, &csv)?;
    }
    out.write_all(text.as_bytes())?;
    Ok(0)
}

fn cmd_jtest(a: JtestArgs, out: &mut dyn Write) -> Result<i32> {
    let seed = require_seed(a.seed, "jtest")?;
    let data = io::read_observations(&a.input)?;
    let model = parse_model(&a.model)?;
    let options = a.estimator.options()?;
    let fit = gmwm::fit(&data, &model, &FitOptions { inference: false, ..options.clone() })?;
    if !fit.converged {
        let _ = writeln!(out, "# converged: false");
        return Ok(2);
    }
    let j = gmwm::jtest_bootstrap(&fit, &model, DataShape::of(&data), a.boot, &options, seed)?;
    let text = format!(
        "statistic,p_value,replicates,failures\n{},{},{},{}\n",
        io::format_value(j.statistic),
        j.p_value,
        j.replicates,
        j.failures
    );
    emit(a.output.as_deref(), &text, out)?;
    Ok(0)
}
