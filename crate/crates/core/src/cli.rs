//! Command-line front end. The binary only forwards its arguments here, so
//! the commands are testable in-process.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autoparallel::{integrate, trajectory_csv, trajectory_json, GaugeChoice, IntegrateOptions, Trajectory};
use crate::catalog::{catalog, lookup, Classification, OracleId};
use crate::connection::{connection, curvature_torsion, ConnectionData, ConnectionOptions, CurvatureData, Gauge};
use crate::degeneracy::{DegeneracyData, DEFAULT_RANK_TOL};
use crate::dsl::{MetricDocument, MetricSpec};
use crate::jet::{Jet2, TangentPoint};
use crate::json;
use crate::verify::{verify_catalog, verify_metric, VerifyOptions, VerifyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_HALT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "finsler", version, about = "Finsler connections and constrained auto-parallel flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Jet, degeneracy split and connection data at one tangent point.
    Inspect(InspectArgs),
    /// Integrate an auto-parallel trajectory (or a sweep of them).
    Geodesic(GeodesicArgs),
    /// Run the verification suites and print a pass/fail table.
    Verify(VerifyArgs),
    /// Dump the built-in metrics in the metric document format.
    Catalog(CatalogArgs),
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    /// Catalog name or path to a JSON metric document.
    #[arg(long)]
    pub metric: String,
    /// Parameter override, `name=value`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub x: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub dx: Vec<f64>,
    /// Gauge multipliers `λ^I` for singular metrics (default zero).
    #[arg(long = "lambda-i", value_delimiter = ',', allow_hyphen_values = true)]
    pub lambda_i: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    /// Include `N2` and the curvature tensor.
    #[arg(long)]
    pub curvature: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaugeArg {
    Time,
    Arclength,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct GeodesicArgs {
    /// Catalog name or metric file; may come from --config instead.
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long = "param", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub dx: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub gauge: Option<GaugeArg>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Project back onto the constraint surface when it drifts.
    #[arg(long)]
    pub project: bool,
    #[arg(long)]
    pub rank_tol: Option<f64>,
    #[arg(long)]
    pub enforce_tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON sweep file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Restrict to these catalog entries; repeatable or comma separated.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Verify a metric file instead of the catalog.
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    /// Only this entry.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Halt(String),
    #[error("verification failed: {0} check(s)")]
    VerifyFailed(usize),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => EXIT_INPUT,
            CliError::Halt(_) => EXIT_HALT,
            CliError::VerifyFailed(_) => EXIT_VERIFY_FAILED,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Io { .. } => "io",
            CliError::Halt(_) => "halt",
            CliError::VerifyFailed(_) => "verify",
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind(), "code": self.exit_code(), "message": self.to_string() }
        })
        .to_string()
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("bad value in {s:?}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

/// Resolves a catalog name or a metric file, then applies overrides.
pub fn load_metric(source: &str, params: &[(String, f64)]) -> Result<MetricSpec, CliError> {
    let spec = match lookup(source) {
        Some(e) => e.spec,
        None => {
            let path = Path::new(source);
            if !path.is_file() {
                let known = crate::catalog::names().join(", ");
                return Err(CliError::Input(format!(
                    "metric {source:?} is neither a catalog entry ({known}) nor a readable file"
                )));
            }
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Io { path: source.to_string(), source: e })?;
            MetricSpec::from_json(&text).map_err(input)?
        }
    };
    if params.is_empty() {
        return Ok(spec);
    }
    let o: Vec<(&str, f64)> = params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    spec.with_parameters(&o).map_err(input)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io { path: p.display().to_string(), source: e }),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())
                .and_then(|_| so.flush())
                .map_err(|e| CliError::Io { path: "<stdout>".into(), source: e })
        }
    }
}

#[derive(Serialize)]
struct InspectOutput<'a> {
    metric: MetricDocument,
    point: &'a TangentPoint,
    jet: &'a Jet2,
    degeneracy: &'a DegeneracyData,
    connection: &'a ConnectionData,
    #[serde(skip_serializing_if = "Option::is_none")]
    curvature: Option<CurvatureData>,
}

pub fn cmd_inspect(args: &InspectArgs) -> Result<String, CliError> {
    if !(args.rank_tol > 0.0) {
        return Err(CliError::Input("--rank-tol must be positive".into()));
    }
    let spec = load_metric(&args.metric.metric, &args.metric.params)?;
    let pt = TangentPoint::new(args.x.clone(), args.dx.clone());
    spec.check_admissible(&pt.x, &pt.dx).map_err(input)?;
    let gauge = args.lambda_i.clone().map_or(Gauge::Zero, Gauge::Fixed);
    let opts = ConnectionOptions { rank_tol: args.rank_tol, ..ConnectionOptions::default() };
    let (jet, deg, conn) = connection(&spec, &pt, &gauge, &opts).map_err(input)?;
    let curvature =
        if args.curvature { Some(curvature_torsion(&spec, &pt, &gauge, &opts).map_err(input)?) } else { None };
    let doc = json::to_string(&InspectOutput {
        metric: spec.to_document(),
        point: &pt,
        jet: &jet,
        degeneracy: &deg,
        connection: &conn,
        curvature,
    });
    emit(args.out.as_deref(), &(doc.clone() + "\n"))?;
    Ok(doc)
}

/// One trajectory of a sweep file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub x: Option<Vec<f64>>,
    pub dx: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
}

/// Sweep file: shared settings plus a list of initial states.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub metric: Option<String>,
    #[serde(default)]
    pub params: std::collections::BTreeMap<String, f64>,
    pub gauge: Option<GaugeArg>,
    pub h: Option<f64>,
    pub steps: Option<usize>,
    pub project: Option<bool>,
    pub rank_tol: Option<f64>,
    pub enforce_tol: Option<f64>,
    pub format: Option<Format>,
    pub x: Option<Vec<f64>>,
    pub dx: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub runs: Vec<RunSpec>,
}

/// Settings of a single trajectory after merging file and flags.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub metric: String,
    pub gauge: GaugeArg,
    pub x: Vec<f64>,
    pub dx: Vec<f64>,
    pub opts: IntegrateOptions,
    pub out: Option<PathBuf>,
    pub format: Format,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub metric: String,
    pub gauge: String,
    pub out: Option<String>,
    pub nodes: usize,
    pub t_final: f64,
    pub halt: Option<String>,
    pub max_constraint: f64,
    pub l_drift: f64,
    pub max_abs_lambda0: f64,
    pub max_el_norm: f64,
    pub projections: usize,
    pub rank_transitions: Vec<(usize, usize, usize)>,
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Input(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Merges a sweep file with command-line flags (flags win) into one
/// validated configuration per run.
pub fn resolve_runs(args: &GeodesicArgs) -> Result<(Vec<RunConfig>, Vec<(String, f64)>), CliError> {
    let file: SweepConfig = match &args.config {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| CliError::Io { path: p.display().to_string(), source: e })?;
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("config {}: {e}", p.display())))?
        }
        None => SweepConfig::default(),
    };
    let metric =
        args.metric.clone().or(file.metric.clone()).ok_or_else(|| CliError::Input("--metric is required".into()))?;
    let mut params: Vec<(String, f64)> = file.params.clone().into_iter().collect();
    for (k, v) in &args.params {
        params.retain(|(pk, _)| pk != k);
        params.push((k.clone(), *v));
    }
    let defaults = IntegrateOptions::default();
    let mut opts = IntegrateOptions {
        h: positive("h", args.h.or(file.h).unwrap_or(defaults.h))?,
        steps: args.steps.or(file.steps).unwrap_or(defaults.steps),
        project: args.project || file.project.unwrap_or(false),
        enforce_tol: positive("enforce-tol", args.enforce_tol.or(file.enforce_tol).unwrap_or(defaults.enforce_tol))?,
        ..defaults
    };
    opts.resolve.rank_tol = positive("rank-tol", args.rank_tol.or(file.rank_tol).unwrap_or(DEFAULT_RANK_TOL))?;
    if opts.steps == 0 {
        return Err(CliError::Input("steps must be at least 1".into()));
    }
    let gauge = args.gauge.or(file.gauge).unwrap_or(GaugeArg::Time);
    let format = args.format.or(file.format).unwrap_or(Format::Csv);
    let runs = if file.runs.is_empty() {
        vec![RunSpec { x: file.x.clone(), dx: file.dx.clone(), out: file.out.clone() }]
    } else {
        file.runs.clone()
    };
    if runs.len() > 1 && args.out.is_some() {
        return Err(CliError::Input("--out cannot be combined with a multi-run config".into()));
    }
    let configs = runs
        .into_iter()
        .enumerate()
        .map(|(k, r)| {
            let missing = |what: &str| CliError::Input(format!("run {k}: --{what} is required"));
            Ok(RunConfig {
                metric: metric.clone(),
                gauge,
                x: args.x.clone().or(r.x).or(file.x.clone()).ok_or_else(|| missing("x"))?,
                dx: args.dx.clone().or(r.dx).or(file.dx.clone()).ok_or_else(|| missing("dx"))?,
                opts: opts.clone(),
                out: args.out.clone().or(r.out),
                format,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((configs, params))
}

fn gauge_choice(g: GaugeArg) -> GaugeChoice {
    match g {
        GaugeArg::Time => GaugeChoice::time(),
        GaugeArg::Arclength => GaugeChoice::arc_length(),
    }
}

fn summarize(cfg: &RunConfig, traj: &Trajectory) -> RunSummary {
    RunSummary {
        metric: cfg.metric.clone(),
        gauge: traj.gauge.clone(),
        out: cfg.out.as_ref().map(|p| p.display().to_string()),
        nodes: traj.nodes.len(),
        t_final: traj.last().t,
        halt: traj.halt.clone(),
        max_constraint: traj.max_constraint(),
        l_drift: traj.l_drift(),
        max_abs_lambda0: traj.max_abs_lambda0(),
        max_el_norm: traj.nodes.iter().fold(0.0, |m, n| m.max(n.el_norm)),
        projections: traj.projections.len(),
        rank_transitions: traj.rank_transitions.clone(),
    }
}

/// Integrates one run; the trajectory is written even when it halts.
pub fn run_one(spec: &MetricSpec, cfg: &RunConfig) -> Result<(Trajectory, RunSummary), CliError> {
    let n1 = spec.dimension();
    if cfg.x.len() != n1 || cfg.dx.len() != n1 {
        return Err(CliError::Input(format!(
            "metric has {n1} coordinates, got {} in x and {} in dx",
            cfg.x.len(),
            cfg.dx.len()
        )));
    }
    spec.check_admissible(&cfg.x, &cfg.dx).map_err(input)?;
    let traj = integrate(spec, &cfg.x, &cfg.dx, &gauge_choice(cfg.gauge), &cfg.opts).map_err(input)?;
    let summary = summarize(cfg, &traj);
    Ok((traj, summary))
}

fn render(traj: &Trajectory, format: Format) -> String {
    match format {
        Format::Csv => trajectory_csv(traj),
        Format::Json => trajectory_json(traj) + "\n",
    }
}

pub fn cmd_geodesic(args: &GeodesicArgs) -> Result<String, CliError> {
    let (runs, params) = resolve_runs(args)?;
    let spec = load_metric(&runs[0].metric, &params)?;
    let results: Vec<Result<(Trajectory, RunSummary), CliError>> = if runs.len() == 1 {
        vec![run_one(&spec, &runs[0])]
    } else {
        let width = std::thread::available_parallelism().map_or(4, |n| n.get());
        let mut out = Vec::with_capacity(runs.len());
        for chunk in runs.chunks(width) {
            std::thread::scope(|s| {
                let handles: Vec<_> = chunk.iter().map(|cfg| s.spawn(|| run_one(&spec, cfg))).collect();
                for h in handles {
                    out.push(h.join().expect("trajectory thread panicked"));
                }
            });
        }
        out
    };
    let mut summaries = Vec::new();
    let mut halted = Vec::new();
    let single_stdout = runs.len() == 1 && runs[0].out.is_none();
    for (cfg, res) in runs.iter().zip(results) {
        let (traj, summary) = res?;
        match &cfg.out {
            Some(p) => emit(Some(p), &render(&traj, cfg.format))?,
            None if single_stdout => emit(None, &render(&traj, cfg.format))?,
            None => return Err(CliError::Input("every run of a sweep needs an \"out\" path".into())),
        }
        if let Some(h) = &summary.halt {
            halted.push(h.clone());
        }
        summaries.push(summary);
    }
    let text = if summaries.len() == 1 { json::to_string(&summaries[0]) } else { json::to_string(&summaries) };
    // with the trajectory on stdout the summary moves to stderr
    if single_stdout {
        eprintln!("{text}");
    } else {
        emit(None, &(text.clone() + "\n"))?;
    }
    if !halted.is_empty() {
        return Err(CliError::Halt(format!("trajectory halted: {}", halted.join("; "))));
    }
    Ok(text)
}

pub fn run_verify(args: &VerifyArgs) -> Result<VerifyReport, CliError> {
    if let Some(m) = &args.metric {
        if lookup(m).is_none() {
            let spec = load_metric(m, &[])?;
            return Ok(VerifyReport { rows: verify_metric(m, &spec, args.seed) });
        }
    }
    let mut only = args.only.clone();
    if let Some(m) = &args.metric {
        only.push(m.clone());
    }
    verify_catalog(&VerifyOptions { only, seed: args.seed, ..VerifyOptions::default() }).map_err(input)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<String, CliError> {
    let report = run_verify(args)?;
    let text = match args.format {
        ReportFormat::Text => report.table(),
        ReportFormat::Json => json::to_string(&report) + "\n",
    };
    emit(args.out.as_deref(), &text)?;
    let failed = report.failures().count();
    if failed > 0 {
        return Err(CliError::VerifyFailed(failed));
    }
    Ok(text)
}

#[derive(Serialize)]
struct CatalogItem {
    name: String,
    classification: Classification,
    oracle: OracleId,
    rank: usize,
    #[serde(rename = "D")]
    gauge_dim: usize,
    metric: MetricDocument,
}

pub fn cmd_catalog(args: &CatalogArgs) -> Result<String, CliError> {
    let items: Vec<CatalogItem> = catalog()
        .into_iter()
        .filter(|e| args.name.as_ref().is_none_or(|n| *n == e.name))
        .map(|e| CatalogItem {
            metric: e.spec.to_document(),
            rank: e.facts.rank,
            gauge_dim: e.facts.gauge_dim,
            classification: e.classification,
            oracle: e.oracle,
            name: e.name,
        })
        .collect();
    if items.is_empty() {
        return Err(CliError::Input(format!("no catalog entry named {:?}", args.name.clone().unwrap_or_default())));
    }
    let text = json::to_string(&items) + "\n";
    emit(args.out.as_deref(), &text)?;
    Ok(text)
}

pub fn dispatch(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Inspect(a) => cmd_inspect(a),
        Command::Geodesic(a) => cmd_geodesic(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Catalog(a) => cmd_catalog(a),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter("FINSLER_LOG")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
