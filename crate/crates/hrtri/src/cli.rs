//! Argument parsing and subcommand dispatch.
//!
//! Exit codes: 0 on success, 1 when a verification check fails, 2 on usage
//! or domain errors.

use crate::checks::{self, defaults, CheckOutcome};
use crate::config::{parse_points, parse_profile, resolve_seed, Provenance};
use crate::error::{CliError, Result};
use crate::io::{self, Column, CsvOptions};
use crate::parallel::Runner;
use crate::study::{self, TableSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hrtri_core::data::{analyze_constant_m, log_returns, standardize, SeriesKind};
use hrtri_core::inference::{mle_fit, test_constant_m, wald_report, Family, FitOptions};
use hrtri_core::limits::{self, Regime};
use hrtri_core::sim::{self, default_grid, ArrayConfig, GridPoint, MaximaSampler, ProfileSchedule};
use serde::Serialize;
use serde_json::json;
use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "hrtri", version, about = "Husler-Reiss limits, simulation and inference for Gaussian triangular arrays")]
pub struct Cli {
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate H, H_lambda, Gumbel products and correction terms.
    Limits(LimitsArgs),
    /// Simulate maxima, the empirical joint cdf or a paired dataset.
    Simulate(SimulateArgs),
    /// Monte Carlo check of a limit theorem against its thresholds.
    Verify(VerifyArgs),
    /// Replicate a simulation table (mean and MSE of the estimators).
    Tables(TablesArgs),
    /// Maximum likelihood fit with Wald intervals.
    Estimate(EstimateArgs),
    /// Wald test of a constant profile within the linear family.
    TestConstancy(TestArgs),
    /// Prefix correlations and the constant-profile fit of real data.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct LimitsArgs {
    /// Profile such as `linear:1,1`, `power:1,1,0.5` or `table:knots.csv`.
    #[arg(long)]
    pub profile: Option<String>,
    /// Husler-Reiss parameter; `inf` gives the independent limit.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Points `x,y;x,y;...` (default: {-1,0,1,2}^2).
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    /// Row length for the correction columns.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulateOutput {
    /// Empirical joint cdf of the normalized maxima on the grid.
    Cdf,
    /// Componentwise maxima per replication.
    Maxima,
    /// One dataset of standardized pairs.
    Pairs,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value = "linear:1,1")]
    pub profile: String,
    #[arg(long, default_value_t = 5000)]
    pub n: u64,
    /// Replications (for `pairs`: the index of the dataset).
    #[arg(long, default_value_t = 10_000)]
    pub reps: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    #[arg(long, value_enum, default_value = "cdf")]
    pub output: SimulateOutput,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// 1: mixed limit H; 2: its correction; 3: dependent; 4: independent.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub theorem: u8,
    /// Comma-separated row lengths.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Profile for theorems 1 and 2.
    #[arg(long, default_value = "linear:1,1")]
    pub profile: String,
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    #[arg(long, default_value_t = defaults::MIXED_TOLERANCE)]
    pub tolerance: f64,
    #[arg(long, default_value_t = defaults::CORRECTION_RATIO)]
    pub ratio: f64,
    #[arg(long, default_value_t = defaults::IMPROVEMENT_FRACTION)]
    pub fraction: f64,
    #[arg(long, default_value_t = defaults::STDERR_MULTIPLE)]
    pub stderr_multiple: f64,
    /// Diagnostic CSV (default: stdout).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Optional JSON summary of the checks.
    #[arg(long)]
    #[serde(skip)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TablesArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub table: u8,
    /// Replications (default 1000, 300 and 100 for tables 1-3).
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct InputArgs {
    /// CSV file; `#` lines are comments.
    #[arg(long)]
    pub input: PathBuf,
    /// First series: 1-based position or header name.
    #[arg(long, default_value = "1")]
    pub x_col: String,
    /// Second series: 1-based position or header name.
    #[arg(long, default_value = "2")]
    pub y_col: String,
    /// The file has no header row.
    #[arg(long)]
    pub no_header: bool,
    /// Skip malformed rows with a warning instead of failing.
    #[arg(long)]
    pub lenient: bool,
}

impl InputArgs {
    fn options(&self, kind: SeriesKind) -> Result<CsvOptions> {
        let col = |s: &str| s.parse::<Column>().map_err(CliError::Usage);
        let mut o = CsvOptions::new(col(&self.x_col)?, col(&self.y_col)?, !self.no_header, kind);
        o.lenient = self.lenient;
        Ok(o)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyArg {
    Constant,
    Linear,
    Power,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Constant => Family::Constant,
            FamilyArg::Linear => Family::Linear,
            FamilyArg::Power => Family::Power,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "power")]
    pub family: FamilyArg,
    /// Hold gamma fixed (power family).
    #[arg(long)]
    pub fixed_gamma: Option<f64>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Standardize both columns before fitting.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub standardize: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KindArg {
    Prices,
    Returns,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "returns")]
    pub kind: KindArg,
    /// Column with dates, echoed into the plot data.
    #[arg(long)]
    pub date_col: Option<String>,
    /// Plot-data CSV (i, prefix_corr, rho_hat).
    #[arg(long)]
    #[serde(skip)]
    pub plot: Option<PathBuf>,
    /// JSON report (default: stdout).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("hrtri: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Runs a parsed command; `Ok(false)` means a verification check failed.
pub fn execute(cli: Cli) -> Result<bool> {
    let runner = Runner::new(cli.threads)?;
    match cli.command {
        Command::Limits(a) => cmd_limits(&a).map(|_| true),
        Command::Simulate(a) => cmd_simulate(&a, &runner).map(|_| true),
        Command::Verify(a) => cmd_verify(&a, &runner),
        Command::Tables(a) => cmd_tables(&a, &runner).map(|_| true),
        Command::Estimate(a) => cmd_estimate(&a).map(|_| true),
        Command::TestConstancy(a) => cmd_test(&a).map(|_| true),
        Command::Analyze(a) => cmd_analyze(&a).map(|_| true),
    }
}

fn config_with_seed<T: Serialize>(command: &str, args: &T, seed: Option<u64>) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(args)?;
    if let Some(s) = seed {
        v["seed"] = s.into();
    }
    Ok(json!({ "command": command, "args": v }))
}

fn grid_from(points: &Option<String>) -> Result<Vec<GridPoint>> {
    match points {
        Some(p) => {
            let g = parse_points(p)?;
            if g.is_empty() {
                return Err(CliError::Usage("no evaluation points given".into()));
            }
            Ok(g)
        }
        None => Ok(default_grid()),
    }
}

pub fn cmd_limits(a: &LimitsArgs) -> Result<()> {
    if a.profile.is_none() && a.lambda.is_none() {
        return Err(CliError::Usage("give --profile and/or --lambda".into()));
    }
    let profile = a.profile.as_deref().map(parse_profile).transpose()?;
    let grid = grid_from(&a.points)?;
    let mut header = vec!["x", "y"];
    if profile.is_some() {
        header.push("H");
    }
    if a.lambda.is_some() {
        header.push("H_lambda");
    }
    header.extend(["gumbel_product", "gumbel_min"]);
    if a.n.is_some() {
        if profile.as_ref().is_some_and(|p| p.is_monotone()) {
            header.push("correction_mixed");
        }
        header.extend(["correction_dependent", "correction_independent"]);
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &(x, y) in &grid {
        let mut v = vec![x, y];
        if let Some(p) = &profile {
            v.push(limits::limit_cdf_h(p, x, y)?);
        }
        if let Some(l) = a.lambda {
            v.push(limits::hr_cdf(l, x, y)?);
        }
        v.push(limits::gumbel_cdf(x) * limits::gumbel_cdf(y));
        v.push(limits::gumbel_cdf(x.min(y)));
        if let Some(n) = a.n {
            if let Some(p) = profile.as_ref().filter(|p| p.is_monotone()) {
                v.push(limits::correction_mixed(p, x, y, n)?.value);
            }
            v.push(limits::correction_dependent(x, y, n)?.value);
            v.push(limits::correction_independent(x, y, n)?.value);
        }
        rows.push(v);
    }
    let provenance = Provenance::new(&config_with_seed("limits", a, None)?, None)?;
    let labelled: Vec<(String, Vec<f64>)> = rows.into_iter().map(|v| (format!("{}", v[0]), v[1..].to_vec())).collect();
    io::write_table_csv(io::output(a.out.as_deref())?, &provenance, &header, &labelled)
}

pub fn cmd_simulate(a: &SimulateArgs, runner: &Runner) -> Result<()> {
    let seed = resolve_seed(a.seed)?;
    let profile = parse_profile(&a.profile)?;
    let provenance = Provenance::new(&config_with_seed("simulate", a, Some(seed))?, None)?;
    let out = io::output(a.out.as_deref())?;
    match a.output {
        SimulateOutput::Cdf => {
            let grid = grid_from(&a.points)?;
            let config = ArrayConfig::new(a.n, profile.clone(), seed)?;
            let cdf = runner.empirical_joint_cdf(&config, &grid, a.reps)?;
            let limit: Vec<f64> =
                grid.iter().map(|&(x, y)| limits::limit_cdf_h(&profile, x, y)).collect::<hrtri_core::Result<_>>()?;
            io::write_cdf_csv(out, &provenance, &cdf, &limit)
        }
        SimulateOutput::Maxima => {
            if a.reps == 0 {
                return Err(CliError::Usage("reps must be at least 1".into()));
            }
            let config = ArrayConfig::new(a.n, profile, seed)?;
            let sampler = MaximaSampler::new(&config)?;
            let b = sampler.norming().b;
            let maxima = runner.map_indexed(a.reps, |rep| sampler.sample(rep));
            let rows: Vec<(String, Vec<f64>)> = maxima
                .iter()
                .enumerate()
                .map(|(rep, &(m1, m2))| (rep.to_string(), vec![m1, m2, b * (m1 - b), b * (m2 - b)]))
                .collect();
            io::write_table_csv(out, &provenance, &["replication", "max_x", "max_y", "normalized_x", "normalized_y"], &rows)
        }
        SimulateOutput::Pairs => {
            let data = hrtri_core::inference::simulate_dataset(&profile, a.n, seed, a.reps)?;
            let rows: Vec<(String, Vec<f64>)> =
                data.iter().enumerate().map(|(i, &(x, y))| ((i + 1).to_string(), vec![x, y])).collect();
            io::write_table_csv(out, &provenance, &["i", "x", "y"], &rows)
        }
    }
}

#[derive(Debug, Serialize)]
struct VerifySummary {
    theorem: u8,
    regime: Regime,
    checks: Vec<CheckOutcome>,
    mean_abs_scaled_error: Vec<(u64, f64)>,
}

pub fn cmd_verify(a: &VerifyArgs, runner: &Runner) -> Result<bool> {
    let seed = resolve_seed(a.seed)?;
    let (regime, schedule) = match a.theorem {
        1 | 2 => (Regime::Mixed, ProfileSchedule::Fixed(parse_profile(&a.profile)?)),
        3 => (Regime::Dependent, ProfileSchedule::DependentAuto),
        _ => (Regime::Independent, ProfileSchedule::IndependentAuto),
    };
    let ns = a.n.clone().unwrap_or_else(|| vec![if a.theorem <= 2 { 5_000 } else { 100_000 }]);
    let reps = a.reps.unwrap_or(if a.theorem <= 2 { 200_000 } else { 100_000 });
    let grid = grid_from(&a.points)?;
    let report = sim::convergence_diagnostic_with(&schedule, &grid, &ns, reps, regime, seed, |c, g, r| {
        runner.empirical_joint_cdf(c, g, r)
    })?;
    let mut config = config_with_seed("verify", a, Some(seed))?;
    config["args"]["n"] = json!(ns);
    config["args"]["reps"] = json!(reps);
    let provenance = Provenance::new(&config, None)?;
    io::write_diagnostic_csv(io::output(a.out.as_deref())?, &provenance, &report)?;

    let checks: Vec<CheckOutcome> = ns
        .iter()
        .map(|&n| match a.theorem {
            1 => checks::mixed_limit(&report, n, a.tolerance),
            2 => checks::correction_ratio(&report, n, a.ratio),
            _ => checks::improvement_fraction(&report, n, a.fraction, a.stderr_multiple),
        })
        .collect();
    for c in &checks {
        eprintln!("{c}");
    }
    let passed = checks.iter().all(|c| c.passed);
    if let Some(path) = &a.summary {
        let summary = VerifySummary {
            theorem: a.theorem,
            regime,
            mean_abs_scaled_error: ns.iter().map(|&n| (n, report.mean_abs_scaled(n))).collect(),
            checks,
        };
        io::write_json(io::output(Some(path))?, &provenance, &summary)?;
    }
    Ok(passed)
}

pub fn cmd_tables(a: &TablesArgs, runner: &Runner) -> Result<()> {
    let seed = resolve_seed(a.seed)?;
    let default_reps = [1000, 300, 100][a.table as usize - 1];
    let mut spec = TableSpec::standard(a.table, a.n, a.reps.unwrap_or(default_reps), seed)?;
    if let Some(v) = a.alpha {
        spec.truth.alpha = v;
    }
    if let Some(v) = a.beta {
        if spec.family == Family::Constant {
            return Err(CliError::Usage("table 1 has no beta".into()));
        }
        spec.truth.beta = v;
    }
    if let Some(v) = a.gamma {
        if spec.family != Family::Power {
            return Err(CliError::Usage("only table 3 has gamma".into()));
        }
        spec.truth.gamma = v;
    }
    let result = study::run_table(runner, &spec)?;
    let config = json!({ "command": "tables", "spec": spec });
    let provenance = Provenance::new(&config, None)?;
    let column = describe_spec(&spec);
    let mut rows = Vec::new();
    for p in &result.params {
        rows.push((format!("E({}_hat)", p.name), vec![p.mean]));
        rows.push((format!("MSE({}_hat)", p.name), vec![p.mse]));
    }
    rows.push(("used_replications".into(), vec![result.used as f64]));
    if spec.family == Family::Power {
        rows.push(("gamma_not_identified".into(), vec![result.gamma_not_identified as f64]));
    }
    for (rep, why) in &result.excluded {
        eprintln!("replication {rep} excluded: {why}");
    }
    io::write_table_csv(io::output(a.out.as_deref())?, &provenance, &["statistic", &column], &rows)
}

fn describe_spec(spec: &TableSpec) -> String {
    let t = spec.truth;
    match spec.family {
        Family::Constant => format!("alpha={} n={}", t.alpha, spec.n),
        Family::Linear => format!("alpha={} beta={} n={}", t.alpha, t.beta, spec.n),
        Family::Power => format!("alpha={} beta={} gamma={} n={}", t.alpha, t.beta, t.gamma, spec.n),
    }
}

fn load_pairs(input: &InputArgs, standardize_columns: bool) -> Result<(Vec<(f64, f64)>, Vec<u8>)> {
    let loaded = io::load_csv(&input.input, &input.options(SeriesKind::Returns)?)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let (x, y) = if standardize_columns {
        (standardize(loaded.series.x())?, standardize(loaded.series.y())?)
    } else {
        (loaded.series.x().to_vec(), loaded.series.y().to_vec())
    };
    Ok((x.into_iter().zip(y).collect(), loaded.bytes))
}

pub fn cmd_estimate(a: &EstimateArgs) -> Result<()> {
    let (data, bytes) = load_pairs(&a.input, a.standardize)?;
    let family: Family = a.family.into();
    let opts = FitOptions { fixed_gamma: a.fixed_gamma, ..FitOptions::default() };
    let fit = mle_fit(&data, family, &opts)?;
    let ci = wald_report(&fit, a.level, None).ok();
    let test = if family == Family::Linear { test_constant_m(&data).ok() } else { None };
    let result = json!({
        "family": fit.family,
        "theta": fit.theta,
        "fixed": fit.fixed,
        "n": fit.n,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "score_norm": fit.score_norm,
        "log_likelihood": fit.log_likelihood,
        "avar": fit.avar,
        "ci": ci,
        "test": test.map(|t| json!({ "beta_hat": t.beta_hat, "std_error": t.std_error, "z": t.z, "p_value": t.p_value })),
        "warnings": fit.warnings,
    });
    let provenance = Provenance::new(&config_with_seed("estimate", a, None)?, Some(&bytes))?;
    io::write_json(io::output(a.out.as_deref())?, &provenance, &result)
}

pub fn cmd_test(a: &TestArgs) -> Result<()> {
    let (data, bytes) = load_pairs(&a.input, a.standardize)?;
    let t = test_constant_m(&data)?;
    let result = json!({
        "null": "beta = 0 in m(s) = alpha + beta s",
        "alpha_hat": t.fit.theta.alpha,
        "beta_hat": t.beta_hat,
        "std_error": t.std_error,
        "z": t.z,
        "p_value": t.p_value,
        "rejects_at_0.05": t.rejects_at(0.05),
        "converged": t.fit.converged,
    });
    let provenance = Provenance::new(&config_with_seed("test-constancy", a, None)?, Some(&bytes))?;
    io::write_json(io::output(a.out.as_deref())?, &provenance, &result)
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> Result<()> {
    let kind = match a.kind {
        KindArg::Prices => SeriesKind::Prices,
        KindArg::Returns => SeriesKind::Returns,
    };
    let mut opts = a.input.options(kind)?;
    opts.date_column = a.date_col.as_deref().map(|c| c.parse::<Column>().map_err(CliError::Usage)).transpose()?;
    let loaded = io::load_csv(&a.input.input, &opts)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let returns = match kind {
        SeriesKind::Prices => log_returns(&loaded.series)?,
        SeriesKind::Returns => loaded.series.clone(),
    };
    let report = analyze_constant_m(&returns)?;
    let provenance = Provenance::new(&config_with_seed("analyze", a, None)?, Some(&loaded.bytes))?;
    if let Some(plot) = &a.plot {
        io::write_plot_csv(io::output(Some(plot))?, &provenance, &report, returns.dates())?;
    }
    let result = json!({
        "n": report.n,
        "labels": report.labels,
        "rho_hat": report.rho_hat,
        "m_hat": report.m_hat,
        "standardized": report.standardized,
        "preprocessing": "both components standardized with full-sample mean and variance (divisor n)",
        "skipped_lines": loaded.skipped_lines,
        "prefix_corr": report.prefix_corr,
    });
    io::write_json(io::output(a.out.as_deref())?, &provenance, &result)
}
