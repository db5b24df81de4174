//! Command-line front end. All file and console I/O lives here.
//!
//! Exit codes: 0 ok, 2 validation error, 3 runtime error, 4 verification
//! failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::inference::{
    default_eps_grid, log_grid_with_zero, naive_fdr_bound, naive_fdr_bound_curve, BoundInput,
};
use crate::knockoff::{build_knockoffs, SVariant};
use crate::linalg::{normalize_columns, Matrix};
use crate::pipeline::{run_method, MethodSpec, SelectionContext};
use crate::simbench::{
    generate_coefficients, generate_design, run_sweep_cells, verify_lemma_frp_mean,
    verify_ratio_bound, verify_sign_property, Axis, NullDist, SimConfig, SweepCell,
    VerificationReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

pub const CSV_HEADER: &str =
    "axis_name,axis_value,method,mean_fdr,se_fdr,mean_power,se_power,trials";

#[derive(Debug, Parser)]
#[command(name = "knockoffs", version, about = "Knockoff selection under composite nulls")]
pub struct Cli {
    /// Master seed; overrides the seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a sweep and write manifest.json and results.csv.
    Simulate(SimulateArgs),
    /// Run Monte-Carlo verifiers and print a pass/fail table.
    Verify(VerifyArgs),
    /// Evaluate the FDR bound of the naive filter under composite nulls.
    Bound(BoundArgs),
    /// Run one selection method on a design/response pair.
    Select(SelectArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Validate and print the resolved parameters without running.
    #[arg(long)]
    pub dry_run: bool,
    /// Use standardized p-values for every composite-BH method.
    #[arg(long)]
    pub bh_standardize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    FrpMean,
    SignProperty,
    RatioBound,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub which: Which,
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub sigma2: f64,
    #[arg(long)]
    pub q: f64,
    /// Comma-separated s values, one per null.
    #[arg(long, conflicts_with = "s_file", allow_hyphen_values = true)]
    pub s: Option<String>,
    /// File of s values separated by commas or newlines.
    #[arg(long)]
    pub s_file: Option<PathBuf>,
    /// Null coefficients (comma-separated); defaults to all at +delta.
    #[arg(long, allow_hyphen_values = true)]
    pub beta_null: Option<String>,
    /// `LO:HI:POINTS`, log-spaced, with 0 prepended.
    #[arg(long)]
    pub eps_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Headerless n x p numeric CSV.
    #[arg(long)]
    pub design: PathBuf,
    /// Headerless n x 1 numeric CSV.
    #[arg(long)]
    pub response: PathBuf,
    /// naive, s-ols-one-sided, s-ols-two-sided, frpp, s-las1, s-las2,
    /// composite-bh
    #[arg(long, default_value = "s-ols-two-sided", conflicts_with = "method_file")]
    pub method: String,
    /// JSON method specification (overrides --method).
    #[arg(long)]
    pub method_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.2)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Privacy parameter for frpp.
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long)]
    pub bh_standardize: bool,
}

/// Sweep configuration; every field is required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub rho: f64,
    pub sigma2: f64,
    pub boundary_delta: f64,
    pub null_dist: NullDist,
    pub amplitude: f64,
    pub same_sign: bool,
    pub q: f64,
    pub trials: usize,
    pub seed: u64,
    pub axis: Axis,
    pub methods: Vec<MethodSpec>,
}

impl ExperimentConfig {
    pub fn base(&self) -> SimConfig {
        SimConfig {
            n: self.n,
            p: self.p,
            k: self.k,
            rho: self.rho,
            sigma2: self.sigma2,
            boundary_delta: self.boundary_delta,
            null_dist: self.null_dist,
            amplitude: self.amplitude,
            same_sign: self.same_sign,
            q: self.q,
            trials: self.trials,
            method: self
                .methods
                .first()
                .cloned()
                .unwrap_or(MethodSpec::CompositeBh { standardize: false }),
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.axis.values().is_empty() {
            return Err(Error::invalid("axis has no values"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("methods list is empty"));
        }
        let base = self.base();
        for &v in self.axis.values() {
            self.axis.apply(&base, v).validate_data()?;
        }
        self.methods.iter().try_for_each(MethodSpec::validate)
    }
}

/// Verifier configuration. `sim` supplies the data model, the method
/// for the sign and ratio checks, the trial count and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub sim: SimConfig,
    /// ε for the ratio check.
    pub epsilon: f64,
    /// Equicorrelated factor for the frp-mean knockoffs.
    pub frp_mean_s_factor: f64,
    /// Multiplier applied to `s` before the frp-mean bounds are evaluated;
    /// anything other than 1 is a negative control.
    pub s_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStatus {
    pub axis_value: f64,
    pub method: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub command: String,
    pub master_seed: u64,
    pub config: ExperimentConfig,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub status: String,
    pub cells: Vec<CellStatus>,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

/// Validation-type library errors map to 2, numerical failures to 3.
fn classify(e: &Error) -> i32 {
    match e {
        Error::ConvergenceFailure { .. } | Error::Trial { .. } => EXIT_RUNTIME,
        Error::AssertionFailure(_) => EXIT_VERIFICATION,
        _ => EXIT_VALIDATION,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: classify(&e),
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses the process arguments and runs; returns the exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<i32> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Failure::validation("--jobs must be at least 1"));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Failure::runtime(format!("cannot start worker pool: {e}")))?;
    let seed = cli.seed;
    pool.install(|| match cli.command {
        Command::Simulate(a) => cmd_simulate(&a, seed),
        Command::Verify(a) => cmd_verify(&a, seed),
        Command::Bound(a) => cmd_bound(&a),
        Command::Select(a) => cmd_select(&a, seed),
    })
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| {
        Failure::validation(format!("cannot read config {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::validation(format!("invalid config {}: {e}", path.display())))
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Fixed 17-significant-digit scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_row(axis_name: &str, c: &SweepCell) -> String {
    format!(
        "{},{},{},{},{},{},{},{}\n",
        axis_name,
        fmt_f64(c.axis_value),
        c.method,
        fmt_f64(c.mean_fdr),
        fmt_f64(c.se_fdr),
        fmt_f64(c.mean_power),
        fmt_f64(c.se_power),
        c.trials
    )
}

fn resolve_experiment(path: &Path, seed: Option<u64>, bh_standardize: bool) -> CliResult<ExperimentConfig> {
    let mut cfg: ExperimentConfig = read_config(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if bh_standardize {
        for m in &mut cfg.methods {
            if let MethodSpec::CompositeBh { standardize } = m {
                *standardize = true;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parameter_table(cfg: &ExperimentConfig) -> String {
    let mut t = String::new();
    let rows: Vec<(&str, String)> = vec![
        ("n", cfg.n.to_string()),
        ("p", cfg.p.to_string()),
        ("k", cfg.k.to_string()),
        ("rho", cfg.rho.to_string()),
        ("sigma2", cfg.sigma2.to_string()),
        ("boundary_delta", cfg.boundary_delta.to_string()),
        ("null_dist", format!("{:?}", cfg.null_dist)),
        ("amplitude", cfg.amplitude.to_string()),
        ("same_sign", cfg.same_sign.to_string()),
        ("q", cfg.q.to_string()),
        ("trials", cfg.trials.to_string()),
        ("seed", cfg.seed.to_string()),
        (
            "axis",
            format!("{} = {:?}", cfg.axis.name(), cfg.axis.values()),
        ),
        (
            "rows",
            (cfg.axis.values().len() * cfg.methods.len()).to_string(),
        ),
    ];
    for (k, v) in rows {
        let _ = writeln!(t, "{k:<16} {v}");
    }
    for (i, m) in cfg.methods.iter().enumerate() {
        let json = serde_json::to_string(m).unwrap_or_default();
        let _ = writeln!(t, "{:<16} {json}", format!("method[{i}]"));
    }
    t
}

fn write_manifest(path: &Path, m: &RunManifest) -> CliResult<()> {
    let text = serde_json::to_string_pretty(m)
        .map_err(|e| Failure::runtime(format!("cannot serialize manifest: {e}")))?;
    fs::write(path, text + "\n")
        .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))
}

fn cmd_simulate(a: &SimulateArgs, seed: Option<u64>) -> CliResult<i32> {
    let cfg = resolve_experiment(&a.config, seed, a.bh_standardize)?;
    if a.dry_run {
        print!("{}", parameter_table(&cfg));
        return Ok(EXIT_OK);
    }
    fs::create_dir_all(&a.out)
        .map_err(|e| Failure::runtime(format!("cannot create {}: {e}", a.out.display())))?;
    let manifest_path = a.out.join("manifest.json");
    let csv_path = a.out.join("results.csv");
    let pending = cfg
        .axis
        .values()
        .iter()
        .flat_map(|&v| {
            cfg.methods.iter().map(move |m| CellStatus {
                axis_value: v,
                method: m.label(),
                status: "pending".into(),
                error: None,
            })
        })
        .collect();
    let mut manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        command: "simulate".into(),
        master_seed: cfg.seed,
        config: cfg.clone(),
        started_at: timestamp(),
        finished_at: None,
        status: "running".into(),
        cells: pending,
    };
    write_manifest(&manifest_path, &manifest)?;

    let cells = run_sweep_cells(&cfg.base(), &cfg.axis, &cfg.methods)?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut first_error = None;
    for (status, cell) in manifest.cells.iter_mut().zip(&cells) {
        match cell {
            Ok(c) => {
                status.status = "ok".into();
                csv.push_str(&csv_row(cfg.axis.name(), c));
            }
            Err(e) => {
                status.status = "failed".into();
                status.error = Some(e.to_string());
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    manifest.finished_at = Some(timestamp());
    if let Some(msg) = first_error {
        manifest.status = "failed".into();
        write_manifest(&manifest_path, &manifest)?;
        return Err(Failure::runtime(msg));
    }
    fs::write(&csv_path, csv)
        .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", csv_path.display())))?;
    manifest.status = "ok".into();
    write_manifest(&manifest_path, &manifest)?;
    println!("wrote {} and {}", manifest_path.display(), csv_path.display());
    Ok(EXIT_OK)
}

fn frp_mean_report(cfg: &VerifyConfig) -> crate::Result<VerificationReport> {
    let sim = &cfg.sim;
    sim.validate_data()?;
    let x = generate_design(sim.n, sim.p, sim.rho, sim.seed)?;
    let (beta, nulls) = generate_coefficients(
        sim.p,
        sim.k,
        sim.boundary_delta,
        sim.null_dist,
        sim.amplitude,
        sim.same_sign,
        sim.seed,
    )?;
    let mut m = build_knockoffs(&x, &SVariant::Equicorrelated(cfg.frp_mean_s_factor))?;
    if !(cfg.s_scale > 0.0 && cfg.s_scale.is_finite()) {
        return Err(Error::invalid(format!("s_scale must be > 0, got {}", cfg.s_scale)));
    }
    m.s.iter_mut().for_each(|s| *s *= cfg.s_scale);
    let mut r = verify_lemma_frp_mean(
        &m,
        &beta,
        &nulls,
        sim.sigma2,
        sim.boundary_delta,
        sim.trials,
        sim.seed,
    )?;
    if cfg.s_scale != 1.0 {
        r.notes.push(format!("s scaled by {} (negative control)", cfg.s_scale));
    }
    Ok(r)
}

fn cmd_verify(a: &VerifyArgs, seed: Option<u64>) -> CliResult<i32> {
    let mut cfg: VerifyConfig = read_config(&a.config)?;
    if let Some(s) = seed {
        cfg.sim.seed = s;
    }
    cfg.sim.validate()?;
    if !(cfg.epsilon > 0.0 && cfg.epsilon.is_finite()) {
        return Err(Error::InvalidEpsilon(cfg.epsilon).into());
    }
    let which: Vec<Which> = match a.which {
        Which::All => vec![Which::FrpMean, Which::SignProperty, Which::RatioBound],
        w => vec![w],
    };
    let mut all_passed = true;
    for w in which {
        let report = match w {
            Which::FrpMean => frp_mean_report(&cfg),
            Which::SignProperty => {
                let mut sim = cfg.sim.clone();
                let forced = a.which == Which::All && sim.boundary_delta != 0.0;
                if forced {
                    sim.boundary_delta = 0.0;
                }
                verify_sign_property(&sim, sim.trials, sim.seed).map(|mut r| {
                    if forced {
                        r.notes.push("run with boundary_delta = 0".into());
                    }
                    r
                })
            }
            Which::RatioBound => verify_ratio_bound(&cfg.sim, cfg.epsilon, cfg.sim.trials, cfg.sim.seed),
            Which::All => unreachable!(),
        }?;
        print!("{report}");
        all_passed &= report.passed();
    }
    println!("overall: {}", if all_passed { "PASS" } else { "FAIL" });
    Ok(if all_passed { EXIT_OK } else { EXIT_VERIFICATION })
}

fn parse_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Failure::validation(format!("{what}: cannot parse '{t}' as a number")))
        })
        .collect()
}

fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Failure::validation(format!("--eps-grid expects LO:HI:POINTS, got '{spec}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let points: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo && hi.is_finite() && points >= 1) {
        return Err(Failure::validation(format!(
            "--eps-grid needs 0 < LO <= HI and POINTS >= 1, got '{spec}'"
        )));
    }
    Ok(log_grid_with_zero(lo, hi, points))
}

fn cmd_bound(a: &BoundArgs) -> CliResult<i32> {
    let s = match (&a.s, &a.s_file) {
        (Some(text), None) => parse_list(text, "--s")?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Failure::validation(format!("cannot read {}: {e}", path.display()))
            })?;
            parse_list(&text, "--s-file")?
        }
        _ => return Err(Failure::validation("exactly one of --s and --s-file is required")),
    };
    let mut input = BoundInput::worst_case(a.delta, a.sigma2, s, a.q);
    if let Some(b) = &a.beta_null {
        input.beta_null = parse_list(b, "--beta-null")?;
    }
    let grid = match &a.eps_grid {
        Some(spec) => parse_grid(spec)?,
        None => default_eps_grid(),
    };
    let (bound, argmin) = naive_fdr_bound(&input, &grid)?;
    let curve = naive_fdr_bound_curve(&input, &grid)?;
    let verdict = if bound >= 1.0 { " vacuous (≥ 1)" } else { "" };
    let mut out = String::new();
    let _ = writeln!(out, "bound,{}{verdict}", fmt_f64(bound));
    let _ = writeln!(out, "argmin_eps,{}", fmt_f64(argmin));
    let _ = writeln!(out, "eps,value");
    for pt in curve {
        let _ = writeln!(out, "{},{}", fmt_f64(pt.eps), fmt_f64(pt.value));
    }
    print!("{out}");
    Ok(EXIT_OK)
}

/// Headerless numeric CSV into a row-major matrix.
fn read_numeric_csv(path: &Path) -> CliResult<Matrix> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::validation(format!("cannot read {}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|_| {
                    Failure::validation(format!(
                        "{}:{}: cannot parse '{}' as a number",
                        path.display(),
                        i + 1,
                        t.trim()
                    ))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Failure::validation(format!(
                    "{}:{}: expected {} columns, found {}",
                    path.display(),
                    i + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Failure::validation(format!("{} is empty", path.display())));
    }
    Ok(Matrix::from_rows(&rows)?)
}

pub fn method_by_name(name: &str, epsilon: f64) -> Option<MethodSpec> {
    Some(match name {
        "naive" => MethodSpec::naive_lasso(),
        "s-ols-one-sided" => MethodSpec::s_ols_one_sided(),
        "s-ols-two-sided" => MethodSpec::s_ols_two_sided(),
        "frpp" => MethodSpec::frpp(epsilon),
        "s-las1" => MethodSpec::s_las1(),
        "s-las2" => MethodSpec::s_las2(),
        "composite-bh" => MethodSpec::CompositeBh { standardize: false },
        _ => return None,
    })
}

#[derive(Debug, Serialize)]
struct SelectOutput {
    method: String,
    /// 1-based.
    selected: Vec<usize>,
    threshold: Option<f64>,
    fdp_estimate: f64,
    q: f64,
    effective_q: f64,
}

fn cmd_select(a: &SelectArgs, seed: Option<u64>) -> CliResult<i32> {
    let mut method = match &a.method_file {
        Some(path) => read_config::<MethodSpec>(path)?,
        None => method_by_name(&a.method, a.epsilon)
            .ok_or_else(|| Failure::validation(format!("unknown method '{}'", a.method)))?,
    };
    if a.bh_standardize {
        if let MethodSpec::CompositeBh { standardize } = &mut method {
            *standardize = true;
        }
    }
    let raw = read_numeric_csv(&a.design)?;
    let resp = read_numeric_csv(&a.response)?;
    if resp.cols() != 1 {
        return Err(Failure::validation(format!(
            "response must have one column, found {}",
            resp.cols()
        )));
    }
    if resp.rows() != raw.rows() {
        return Err(Failure::validation(format!(
            "design has {} rows but response has {}",
            raw.rows(),
            resp.rows()
        )));
    }
    if !(a.q > 0.0 && a.q < 1.0) {
        return Err(Failure::validation(format!("q must lie in (0, 1), got {}", a.q)));
    }
    if !(a.delta >= 0.0 && a.delta.is_finite()) {
        return Err(Failure::validation(format!("delta must be >= 0, got {}", a.delta)));
    }
    if method.uses_knockoffs() && raw.rows() < 2 * raw.cols() {
        return Err(Failure::validation(format!(
            "knockoff methods need n >= 2p, got n = {}, p = {}",
            raw.rows(),
            raw.cols()
        )));
    }
    let x = normalize_columns(&raw)?;
    let ctx = SelectionContext {
        boundary_delta: a.delta,
        q: a.q,
        sigma2: a.sigma2,
        noise_seed: seed.unwrap_or(0),
    };
    let out = run_method(&x, resp.as_slice(), &method, &ctx)?;
    let sel = out.selection;
    let result = SelectOutput {
        method: method.label(),
        selected: sel.selected.iter().map(|j| j + 1).collect(),
        threshold: sel.threshold.is_finite().then_some(sel.threshold),
        fdp_estimate: sel.fdp_estimate,
        q: a.q,
        effective_q: out.effective_q,
    };
    let json = serde_json::to_string_pretty(&result)
        .map_err(|e| Failure::runtime(format!("cannot serialize result: {e}")))?;
    println!("{json}");
    Ok(EXIT_OK)
}
