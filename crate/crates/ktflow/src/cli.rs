//! Command-line orchestration: configuration parsing with overrides, initial
//! metric presets, run artifacts and report emission.
//!
//! Exit codes: 0 success, 2 configuration error, 3 positivity/stability
//! event, 4 verification failure.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::deform::{self, DeformProfile};
use crate::flow::{self, FlowRunSpec, RhsVariant};
use crate::geometry;
use crate::grid::{GridSpec, ScalarField};
use crate::jsonout;
use crate::metric::{HermitianMetricField, Snapshot};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_POSITIVITY: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("flow terminated: {0}")]
    Positivity(String),
    #[error("verification failed: {0} of {1} checks did not pass")]
    Verification(usize, usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Positivity(_) => EXIT_POSITIVITY,
            CliError::Verification(..) => EXIT_VERIFY,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

// ---------------------------------------------------------------------------
// configuration

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_n")]
    pub n: usize,
}

fn default_n() -> usize {
    64
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: default_n() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    Invariant {
        #[serde(default = "one")]
        r0: f64,
        #[serde(default = "one")]
        s: f64,
        #[serde(default)]
        u0: [f64; 2],
    },
    Type1 {
        #[serde(default = "one")]
        b: f64,
        #[serde(default)]
        a1: f64,
        #[serde(default)]
        a2: f64,
    },
    Type2 {
        #[serde(default = "default_profile")]
        profile: String,
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default)]
        path: Option<PathBuf>,
    },
    Snapshot {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn default_profile() -> String {
    "one-mode".to_string()
}

fn default_eps() -> f64 {
    0.005
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::Invariant {
            r0: 1.0,
            s: 1.0,
            u0: [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(default = "one")]
    pub t_end: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_variant")]
    pub rhs_variant: String,
    #[serde(default = "default_monitor_every")]
    pub monitor_every: u64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

fn default_safety() -> f64 {
    flow::DEFAULT_SAFETY
}

fn default_variant() -> String {
    "newsystem".to_string()
}

fn default_monitor_every() -> u64 {
    10
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            safety: default_safety(),
            rhs_variant: default_variant(),
            monitor_every: default_monitor_every(),
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Constancy/closedness tolerance for the Vaisman classifier.
    #[serde(default = "default_vaisman_tol")]
    pub vaisman: f64,
    /// Residual bound used by the drift experiment's preserved verdict.
    #[serde(default = "default_vaisman_tol")]
    pub residual: f64,
}

fn default_vaisman_tol() -> f64 {
    geometry::DEFAULT_TOL
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            vaisman: default_vaisman_tol(),
            residual: default_vaisman_tol(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
        }
    }
}

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub rhs_variant: Option<String>,
    pub grid_n: Option<usize>,
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut config = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| config_err(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str::<RunConfig>(&text)
                    .map_err(|e| config_err(format!("config {}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(dir) = &overrides.out {
            config.output.dir = dir.clone();
        }
        if let Some(v) = &overrides.rhs_variant {
            config.flow.rhs_variant = v.clone();
        }
        if let Some(n) = overrides.grid_n {
            config.grid.n = n;
        }
        if let Some(t) = overrides.tol {
            config.tolerances.vaisman = t;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        GridSpec::new(self.grid.n).map_err(config_err)?;
        if !(self.flow.t_end > 0.0) {
            return Err(config_err(format!(
                "flow.t_end must be positive, got {}",
                self.flow.t_end
            )));
        }
        if !(self.flow.safety > 0.0 && self.flow.safety <= 1.0) {
            return Err(config_err(format!(
                "flow.safety must lie in (0, 1], got {}",
                self.flow.safety
            )));
        }
        self.variant()?;
        if !(self.tolerances.vaisman > 0.0) || !(self.tolerances.residual > 0.0) {
            return Err(config_err("tolerances must be positive"));
        }
        if let InitialConfig::Snapshot { path } | InitialConfig::Type2 {
            path: Some(path), ..
        } = &self.initial
        {
            if !path.exists() {
                return Err(config_err(format!(
                    "referenced file does not exist: {}",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec::new(self.grid.n).expect("validated")
    }

    pub fn variant(&self) -> Result<RhsVariant, CliError> {
        self.flow.rhs_variant.parse().map_err(CliError::Config)
    }

    pub fn flow_run_spec(&self) -> Result<FlowRunSpec, CliError> {
        Ok(FlowRunSpec {
            t_end: self.flow.t_end,
            safety: self.flow.safety,
            variant: self.variant()?,
            monitor_every: self.flow.monitor_every,
            snapshot_times: self.flow.snapshot_times.clone(),
        })
    }
}

/// Scalar-field file for custom type-II profiles:
/// `{version:1, n, values:[n²]}`.
#[derive(Deserialize)]
struct RawScalarFile {
    version: u32,
    n: usize,
    values: Vec<f64>,
}

fn read_scalar_file(path: &Path, spec: GridSpec) -> Result<ScalarField, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let raw: RawScalarFile = serde_json::from_str(&text)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    if raw.version != 1 {
        return Err(config_err(format!(
            "{}: unsupported scalar file version {}",
            path.display(),
            raw.version
        )));
    }
    if raw.n != spec.n() {
        return Err(config_err(format!(
            "{}: grid size {} does not match configured n = {}",
            path.display(),
            raw.n,
            spec.n()
        )));
    }
    ScalarField::from_values(spec, raw.values).map_err(config_err)
}

/// Initial data resolved from the configuration.
pub struct InitialData {
    pub metric: HermitianMetricField,
    /// Present when the initial metric came from a type-II profile.
    pub profile: Option<DeformProfile>,
}

pub fn build_initial(config: &RunConfig) -> Result<InitialData, CliError> {
    let spec = config.spec();
    match &config.initial {
        InitialConfig::Invariant { r0, s, u0 } => {
            let metric = HermitianMetricField::constant(spec, *r0, *s, (u0[0], u0[1]))
                .map_err(|e| config_err(format!("invariant preset: {e}")))?;
            Ok(InitialData {
                metric,
                profile: None,
            })
        }
        InitialConfig::Type1 { b, a1, a2 } => {
            let metric = deform::type_one_deform(spec, *b, *a1, *a2)
                .map_err(|e| config_err(format!("type1 preset: {e}")))?;
            Ok(InitialData {
                metric,
                profile: None,
            })
        }
        InitialConfig::Type2 { profile, eps, path } => {
            let profile = match profile.as_str() {
                "one-mode" => deform::profile_one_mode(spec, *eps),
                "two-mode" => deform::profile_two_mode(spec, *eps),
                "custom" => {
                    let path = path.as_ref().ok_or_else(|| {
                        config_err("type2 custom profile requires \"path\"")
                    })?;
                    let f = read_scalar_file(path, spec)?;
                    deform::DeformProfile::from_field(
                        format!("custom({})", path.display()),
                        f,
                        None,
                    )
                }
                other => {
                    return Err(config_err(format!(
                        "unknown type2 profile '{other}' (expected one-mode, two-mode or custom)"
                    )))
                }
            }
            .map_err(|e| config_err(format!("type2 preset: {e}")))?;
            let metric = deform::type_two_deform(&profile)
                .map_err(|e| config_err(format!("type2 preset: {e}")))?;
            Ok(InitialData {
                metric,
                profile: Some(profile),
            })
        }
        InitialConfig::Snapshot { path } => {
            let snap = Snapshot::read(path).map_err(config_err)?;
            Ok(InitialData {
                metric: snap.metric,
                profile: None,
            })
        }
    }
}

fn ensure_out_dir(config: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&config.output.dir)
        .map_err(|e| config_err(format!("cannot create {}: {e}", config.output.dir.display())))
}

fn snapshot_path(dir: &Path, t: f64) -> PathBuf {
    dir.join(format!("snapshot_t{t}.json"))
}

// ---------------------------------------------------------------------------
// commands

/// `init`: build the configured initial metric, write snapshot_t0.json and
/// print its analysis report.
pub fn cmd_init(config: &RunConfig) -> Result<String, CliError> {
    let initial = build_initial(config)?;
    ensure_out_dir(config)?;
    let snap = Snapshot::new(initial.metric.clone(), 0.0);
    snap.write(&snapshot_path(&config.output.dir, 0.0))
        .map_err(config_err)?;
    let report = geometry::analyze(&initial.metric, config.tolerances.vaisman)
        .map_err(config_err)?;
    Ok(report.to_json())
}

/// `analyze`: classification report for a stored snapshot.
pub fn cmd_analyze(snapshot: &Path, tol: f64) -> Result<String, CliError> {
    let snap = Snapshot::read(snapshot).map_err(config_err)?;
    let report = geometry::analyze(&snap.metric, tol).map_err(config_err)?;
    Ok(report.to_json())
}

/// `evolve`: integrate the flow, writing monitor.csv, snapshots and
/// report.json. Returns the report and whether a positivity event ended the
/// run early (exit code 3).
pub fn cmd_evolve(config: &RunConfig) -> Result<(String, bool), CliError> {
    let initial = build_initial(config)?;
    initial
        .metric
        .require_pluriclosed()
        .map_err(|e| config_err(format!("initial metric: {e}")))?;
    ensure_out_dir(config)?;

    let mut run_spec = config.flow_run_spec()?;
    if !run_spec
        .snapshot_times
        .iter()
        .any(|&t| (t - run_spec.t_end).abs() <= f64::EPSILON * run_spec.t_end)
    {
        run_spec.snapshot_times.push(run_spec.t_end);
    }
    let outcome = flow::run(initial.metric, &run_spec).map_err(config_err)?;

    let mut csv = String::from(flow::MONITOR_HEADER);
    csv.push('\n');
    for record in &outcome.records {
        csv.push_str(&record.csv_row());
        csv.push('\n');
    }
    let dir = &config.output.dir;
    fs::write(dir.join("monitor.csv"), csv)
        .map_err(|e| config_err(format!("write monitor.csv: {e}")))?;
    for snap in &outcome.snapshots {
        snap.write(&snapshot_path(dir, snap.t)).map_err(config_err)?;
    }

    let final_analysis = geometry::analyze(
        &outcome.final_state.metric,
        config.tolerances.vaisman,
    )
    .map_err(config_err)?;
    let drift = flow::drift_report_from_records(
        &outcome.records,
        run_spec.variant,
        config.tolerances.residual,
        outcome.final_state.t,
        outcome.termination.completed(),
    );
    let report = format!(
        "{{\"termination\":\"{}\",\"completed\":{},\"t_final\":{},\"steps\":{},\"final_analysis\":{},\"drift\":{}}}\n",
        outcome.termination.reason(),
        jsonout::bool(outcome.termination.completed()),
        jsonout::float(outcome.final_state.t),
        outcome.final_state.step_index,
        final_analysis.to_json().trim_end(),
        drift.to_json().trim_end(),
    );
    fs::write(dir.join("report.json"), &report)
        .map_err(|e| config_err(format!("write report.json: {e}")))?;
    Ok((report, !outcome.termination.completed()))
}

/// `verify`: run the invariant suite; Err(Verification) when any check fails.
pub fn cmd_verify(config: &RunConfig) -> Result<String, CliError> {
    let summary = verify::run_all(config.grid.n, config.tolerances.vaisman)
        .map_err(config_err)?;
    let json = summary.to_json();
    if summary.all_pass() {
        Ok(json)
    } else {
        let failed = summary.checks.iter().filter(|c| !c.pass).count();
        eprint!("{json}");
        Err(CliError::Verification(failed, summary.checks.len()))
    }
}

/// `drift`: run the Vaisman drift experiment from a type-II profile.
pub fn cmd_drift(config: &RunConfig) -> Result<String, CliError> {
    let initial = build_initial(config)?;
    if initial.profile.is_none() {
        return Err(config_err(
            "drift requires a type2 initial preset (profile one-mode, two-mode or custom)",
        ));
    }
    ensure_out_dir(config)?;
    let run_spec = config.flow_run_spec()?;
    let (report, outcome) = flow::vaisman_drift_experiment(
        initial.metric,
        &run_spec,
        config.tolerances.residual,
    )
    .map_err(config_err)?;

    let dir = &config.output.dir;
    let mut csv = String::from(flow::MONITOR_HEADER);
    csv.push('\n');
    for record in &outcome.records {
        csv.push_str(&record.csv_row());
        csv.push('\n');
    }
    fs::write(dir.join("drift_monitor.csv"), csv)
        .map_err(|e| config_err(format!("write drift_monitor.csv: {e}")))?;
    let json = report.to_json();
    fs::write(dir.join("drift.json"), &json)
        .map_err(|e| config_err(format!("write drift.json: {e}")))?;
    Ok(json)
}

/// Validate KTFLOW_THREADS (0 = auto). All computation is sequential — the
/// monitor reductions are bitwise-deterministic by construction — so any cap
/// is honored; the variable is parsed for interface compatibility.
pub fn parse_threads_env(value: Option<&str>) -> Result<usize, CliError> {
    match value {
        None => Ok(0),
        Some(text) => text.trim().parse::<usize>().map_err(|_| {
            config_err(format!(
                "KTFLOW_THREADS must be a non-negative integer, got '{text}'"
            ))
        }),
    }
}
