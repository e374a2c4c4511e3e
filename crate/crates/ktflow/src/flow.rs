//! The pluriclosed flow ∂ₜω = −(ρ^B)^{1,1} for the invariant family, as a
//! method-of-lines system integrated by classical RK4.
//!
//! With s constant the flow reduces to
//!
//! ```text
//! ∂ₜr  = ½Δ log F + (1/s²)(h₃² + h₄²)F + (1/s)∂ₜ|u|²     (newsystem)
//! ∂ₜu₁ = −½(h₃)ₓ + ½(h₄)_y
//! ∂ₜu₂ = −½(h₃)_y − ½(h₄)ₓ
//! ∂ₜs  = 0
//! ```
//!
//! which is quasilinear parabolic (both u-equations linearize to +½Δu, and the
//! r-equation to (s/2F)Δr). The alternative `bismut` right-hand side
//! transcribes ∂ₜr = ½Δ log F + (h₁)_y + (h₂)ₓ + h₃ from the Bismut Ricci
//! coefficient; by the reduction identity the two differ by
//! (2/s²)(h₃²+h₄²)F − (2/s)[u₁((h₃)ₓ−(h₄)_y) + u₂((h₃)_y+(h₄)ₓ)], an exact
//! relation pinned by the verification suite. The u- and s-equations are the
//! same in both variants; `newsystem` is the canonical choice (positive
//! expansion rate on invariant data, matching the constant-data closed form).
//!
//! The timestep obeys the parabolic stability bound dt = safety·Δx²·min(F)/s.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{self, GeometryError, RicciRoute};
use crate::grid::{self, Axis, GridError, ScalarField};
use crate::jsonout;
use crate::metric::{HermitianMetricField, MetricError, Snapshot};

/// Default safety factor for the parabolic timestep bound.
pub const DEFAULT_SAFETY: f64 = 0.2;
/// Maximum dt-halving retries before a step is declared failed.
pub const MAX_RETRIES: usize = 10;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Forms(#[from] crate::forms::FormsError),
    #[error("invalid flow configuration: {0}")]
    BadConfig(String),
}

/// Which r-equation the right-hand side uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsVariant {
    /// ½Δlog F + (1/s²)(h₃²+h₄²)F + (1/s)∂ₜ|u|² (canonical).
    NewSystem,
    /// ½Δlog F + (h₁)_y + (h₂)ₓ + h₃ (opposite reaction-term sign).
    Bismut,
}

impl fmt::Display for RhsVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhsVariant::NewSystem => write!(f, "newsystem"),
            RhsVariant::Bismut => write!(f, "bismut"),
        }
    }
}

impl FromStr for RhsVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "newsystem" => Ok(RhsVariant::NewSystem),
            "bismut" => Ok(RhsVariant::Bismut),
            other => Err(format!(
                "unknown rhs variant '{other}' (expected newsystem or bismut)"
            )),
        }
    }
}

/// Time derivatives of the evolving fields (s never changes).
#[derive(Debug, Clone)]
pub struct Rhs {
    pub r_dot: ScalarField,
    pub u1_dot: ScalarField,
    pub u2_dot: ScalarField,
}

/// Right-hand side of the reduced flow; rejects non-pluriclosed input.
pub fn flow_rhs(m: &HermitianMetricField, variant: RhsVariant) -> Result<Rhs, FlowError> {
    m.require_pluriclosed()?;
    rhs_unchecked(m, variant)
}

/// RHS without the pluriclosed gate; used inside RK4 stages where s is
/// carried over bit-identically from an already-checked state.
fn rhs_unchecked(m: &HermitianMetricField, variant: RhsVariant) -> Result<Rhs, FlowError> {
    let [h1, h2, h3, h4] = geometry::lee_fields(m)?;
    let h3x = grid::partial_derivative(&h3, Axis::X)?;
    let h3y = grid::partial_derivative(&h3, Axis::Y)?;
    let h4x = grid::partial_derivative(&h4, Axis::X)?;
    let h4y = grid::partial_derivative(&h4, Axis::Y)?;

    let u1_dot = h3x.scale(-0.5).add(&h4y.scale(0.5));
    let u2_dot = h3y.scale(-0.5).sub(&h4x.scale(0.5));

    let log_f = m.det_function().map(f64::ln);
    let half_lap = grid::laplacian(&log_f)?.scale(0.5);

    let r_dot = match variant {
        RhsVariant::NewSystem => {
            let f = m.det_function();
            let s2 = m.s().mul(m.s());
            let reaction = h3.mul(&h3).add(&h4.mul(&h4)).mul(&f).div(&s2);
            let du_sq = m
                .u1()
                .mul(&u1_dot)
                .add(&m.u2().mul(&u2_dot))
                .scale(2.0)
                .div(m.s());
            half_lap.add(&reaction).add(&du_sq)
        }
        RhsVariant::Bismut => {
            let h1y = grid::partial_derivative(&h1, Axis::Y)?;
            let h2x = grid::partial_derivative(&h2, Axis::X)?;
            half_lap.add(&h1y).add(&h2x).add(&h3)
        }
    };
    Ok(Rhs {
        r_dot,
        u1_dot,
        u2_dot,
    })
}

/// Parabolic stability bound dt = safety·Δx²·min(F)/s, capped by `remaining`.
pub fn select_timestep(m: &HermitianMetricField, safety: f64, remaining: f64) -> f64 {
    let dx = m.spec().dx();
    let f_min = m.det_function().min();
    let s_mean = grid::spatial_stats(m.s()).mean;
    (safety * dx * dx * f_min / s_mean).min(remaining)
}

/// One point on the trajectory.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub metric: HermitianMetricField,
    /// Step size to attempt next (run loops refresh it from the CFL bound).
    pub dt: f64,
    pub step_index: u64,
}

impl FlowState {
    pub fn initial(metric: HermitianMetricField) -> Self {
        Self {
            t: 0.0,
            metric,
            dt: 0.0,
            step_index: 0,
        }
    }
}

fn advanced(
    m: &HermitianMetricField,
    k: &Rhs,
    dt: f64,
) -> Result<HermitianMetricField, MetricError> {
    HermitianMetricField::new(
        m.r().zip_map(&k.r_dot, |v, d| v + dt * d),
        m.s().clone(),
        m.u1().zip_map(&k.u1_dot, |v, d| v + dt * d),
        m.u2().zip_map(&k.u2_dot, |v, d| v + dt * d),
    )
}

fn rk4_attempt(
    m: &HermitianMetricField,
    variant: RhsVariant,
    dt: f64,
) -> Result<HermitianMetricField, FlowError> {
    let k1 = rhs_unchecked(m, variant)?;
    let m2 = advanced(m, &k1, 0.5 * dt)?;
    let k2 = rhs_unchecked(&m2, variant)?;
    let m3 = advanced(m, &k2, 0.5 * dt)?;
    let k3 = rhs_unchecked(&m3, variant)?;
    let m4 = advanced(m, &k3, dt)?;
    let k4 = rhs_unchecked(&m4, variant)?;
    let sixth = dt / 6.0;
    let combine = |a: &ScalarField, b: &ScalarField, c: &ScalarField, d: &ScalarField| {
        let mut vals = Vec::with_capacity(a.spec().len());
        for i in 0..a.spec().len() {
            vals.push(
                sixth
                    * (a.values()[i]
                        + 2.0 * b.values()[i]
                        + 2.0 * c.values()[i]
                        + d.values()[i]),
            );
        }
        ScalarField::from_values(a.spec(), vals)
    };
    let increment = Rhs {
        r_dot: combine(&k1.r_dot, &k2.r_dot, &k3.r_dot, &k4.r_dot)?,
        u1_dot: combine(&k1.u1_dot, &k2.u1_dot, &k3.u1_dot, &k4.u1_dot)?,
        u2_dot: combine(&k1.u2_dot, &k2.u2_dot, &k3.u2_dot, &k4.u2_dot)?,
    };
    Ok(advanced(m, &increment, 1.0)?)
}

/// One RK4 step of size `state.dt`; on a positivity or finiteness failure in
/// any stage the step is retried with dt halved, up to [`MAX_RETRIES`] times.
pub fn step(state: &FlowState, variant: RhsVariant) -> Result<FlowState, FlowError> {
    let mut dt = state.dt;
    let mut last_err: Option<FlowError> = None;
    for _ in 0..=MAX_RETRIES {
        match rk4_attempt(&state.metric, variant, dt) {
            Ok(metric) => {
                return Ok(FlowState {
                    t: state.t + dt,
                    metric,
                    dt,
                    step_index: state.step_index + 1,
                });
            }
            Err(e) => {
                last_err = Some(e);
                dt *= 0.5;
            }
        }
    }
    Err(last_err.expect("at least one attempt was made"))
}

/// Closed-form r(t) for spatially constant data: F(t) = √(F₀² + 2s³t),
/// r(t) = (F(t) + |u₀|²)/s, from the separable ODE F·F′ = s³
/// (ṙ = s²/F with u frozen). Cross-checked in the tests against a fine-step
/// independent integration before being used as an oracle anywhere.
pub fn constant_data_oracle(r0: f64, s: f64, u0: (f64, f64), t: f64) -> f64 {
    let u_sq = u0.0 * u0.0 + u0.1 * u0.1;
    let f0 = r0 * s - u_sq;
    let f = (f0 * f0 + 2.0 * s.powi(3) * t).sqrt();
    (f + u_sq) / s
}

/// Monitor CSV header, in exact column order.
pub const MONITOR_HEADER: &str = "t,dt,F_min,F_max,r_mean,h3_mean,h3_std,h4_mean,h4_std,lee_residual,ricci_xcheck_residual,pluriclosed_residual,u_drift";

/// Per-record diagnostics row.
#[derive(Debug, Clone, Copy)]
pub struct MonitorRecord {
    pub t: f64,
    pub dt: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub r_mean: f64,
    pub h3_mean: f64,
    pub h3_std: f64,
    pub h4_mean: f64,
    pub h4_std: f64,
    pub lee_residual: f64,
    pub ricci_xcheck_residual: f64,
    pub pluriclosed_residual: f64,
    pub u_drift: f64,
}

impl MonitorRecord {
    pub fn csv_row(&self) -> String {
        [
            self.t,
            self.dt,
            self.f_min,
            self.f_max,
            self.r_mean,
            self.h3_mean,
            self.h3_std,
            self.h4_mean,
            self.h4_std,
            self.lee_residual,
            self.ricci_xcheck_residual,
            self.pluriclosed_residual,
            self.u_drift,
        ]
        .iter()
        .map(|v| jsonout::float(*v))
        .collect::<Vec<_>>()
        .join(",")
    }
}

fn monitor(
    state: &FlowState,
    initial: &HermitianMetricField,
) -> Result<MonitorRecord, FlowError> {
    let m = &state.metric;
    let f = m.det_function();
    let lee = geometry::lee_form(m)?;
    let h3 = lee.h3_stats();
    let h4 = lee.h4_stats();
    let formula = geometry::bismut_ricci_11_with(m, &lee, RicciRoute::Formula)?;
    let relation = geometry::bismut_ricci_11_with(m, &lee, RicciRoute::Relation)?;
    let u_drift = m
        .u1()
        .sub(initial.u1())
        .norm_inf()
        .max(m.u2().sub(initial.u2()).norm_inf());
    Ok(MonitorRecord {
        t: state.t,
        dt: state.dt,
        f_min: f.min(),
        f_max: f.max(),
        r_mean: grid::spatial_stats(m.r()).mean,
        h3_mean: h3.mean,
        h3_std: h3.std,
        h4_mean: h4.mean,
        h4_std: h4.std,
        lee_residual: lee.residual,
        ricci_xcheck_residual: formula.sub(&relation).norm_inf(),
        pluriclosed_residual: m.pluriclosed_residual().residual,
        u_drift,
    })
}

/// How a run ended.
#[derive(Debug, Clone)]
pub enum Termination {
    Completed,
    /// Positivity or stability failure; the outcome carries the last good
    /// state and the records up to it.
    PositivityFailure { t: f64, detail: String },
}

impl Termination {
    pub fn completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }

    pub fn reason(&self) -> String {
        match self {
            Termination::Completed => "completed".to_string(),
            Termination::PositivityFailure { t, detail } => {
                format!("positivity/stability failure at t = {t}: {detail}")
            }
        }
    }
}

/// Flow-loop parameters.
#[derive(Debug, Clone)]
pub struct FlowRunSpec {
    pub t_end: f64,
    pub safety: f64,
    pub variant: RhsVariant,
    /// Emit a monitor record every this many steps (plus step 0 and the last).
    pub monitor_every: u64,
    /// Times at which to capture snapshots; each is hit exactly by capping dt.
    pub snapshot_times: Vec<f64>,
}

impl FlowRunSpec {
    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.t_end > 0.0) {
            return Err(FlowError::BadConfig(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(FlowError::BadConfig(format!(
                "safety must lie in (0, 1], got {}",
                self.safety
            )));
        }
        if self.monitor_every == 0 {
            return Err(FlowError::BadConfig("monitor_every must be positive".into()));
        }
        for &t in &self.snapshot_times {
            if !(t > 0.0 && t <= self.t_end) {
                return Err(FlowError::BadConfig(format!(
                    "snapshot time {t} outside (0, t_end]"
                )));
            }
        }
        Ok(())
    }
}

/// Everything a run produces.
#[derive(Debug)]
pub struct RunOutcome {
    pub final_state: FlowState,
    pub records: Vec<MonitorRecord>,
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
}

/// Integrate from `initial` to t_end (or a terminal event). Deterministic:
/// fixed summation orders, no threading, dt depends only on the trajectory.
pub fn run(initial: HermitianMetricField, spec: &FlowRunSpec) -> Result<RunOutcome, FlowError> {
    spec.validate()?;
    initial.require_pluriclosed()?;

    let mut events: Vec<f64> = spec.snapshot_times.clone();
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    events.dedup();

    let time_eps = 1e-12 * spec.t_end.max(1.0);
    let initial_copy = initial.clone();
    let mut state = FlowState::initial(initial);
    let mut records = vec![monitor(&state, &initial_copy)?];
    let mut snapshots = Vec::new();
    let mut next_event = 0usize;
    let mut last_recorded_step = 0u64;

    while state.t < spec.t_end - time_eps {
        let mut remaining = spec.t_end - state.t;
        if let Some(&ev) = events.get(next_event) {
            if ev > state.t + time_eps {
                remaining = remaining.min(ev - state.t);
            }
        }
        state.dt = select_timestep(&state.metric, spec.safety, remaining);
        match step(&state, spec.variant) {
            Ok(next) => state = next,
            Err(e) => {
                let record = monitor(&state, &initial_copy)?;
                if state.step_index != last_recorded_step || records.is_empty() {
                    records.push(record);
                }
                return Ok(RunOutcome {
                    termination: Termination::PositivityFailure {
                        t: state.t,
                        detail: e.to_string(),
                    },
                    final_state: state,
                    records,
                    snapshots,
                });
            }
        }
        if state.step_index % spec.monitor_every == 0 {
            records.push(monitor(&state, &initial_copy)?);
            last_recorded_step = state.step_index;
        }
        if let Some(&ev) = events.get(next_event) {
            if (state.t - ev).abs() <= time_eps {
                snapshots.push(Snapshot::new(state.metric.clone(), ev));
                next_event += 1;
            }
        }
    }
    if state.step_index != last_recorded_step {
        records.push(monitor(&state, &initial_copy)?);
    }
    Ok(RunOutcome {
        final_state: state,
        records,
        snapshots,
        termination: Termination::Completed,
    })
}

/// Measured behaviour of the Vaisman condition along a run; a measurement,
/// not an assertion (first-order drift of h₃ constancy is expected whenever
/// F is spatially non-constant).
#[derive(Debug, Clone)]
pub struct DriftReport {
    pub variant: RhsVariant,
    pub preserved_within_tol: bool,
    /// Least-squares slope of h3_std over the initial quarter of the run.
    pub drift_rate: f64,
    pub max_h3_rel_std: f64,
    pub max_h4_std: f64,
    pub tol: f64,
    pub t_final: f64,
    pub completed: bool,
}

impl DriftReport {
    pub fn to_json(&self) -> String {
        format!(
            concat!(
                "{{\"variant\":\"{}\",\"preserved_within_tol\":{},\"drift_rate\":{},",
                "\"max_h3_rel_std\":{},\"max_h4_std\":{},\"tol\":{},",
                "\"t_final\":{},\"completed\":{}}}\n"
            ),
            self.variant,
            jsonout::bool(self.preserved_within_tol),
            jsonout::float(self.drift_rate),
            jsonout::float(self.max_h3_rel_std),
            jsonout::float(self.max_h4_std),
            jsonout::float(self.tol),
            jsonout::float(self.t_final),
            jsonout::bool(self.completed),
        )
    }
}

/// Summarize a finished run's records into a drift verdict.
pub fn drift_report_from_records(
    records: &[MonitorRecord],
    variant: RhsVariant,
    tol: f64,
    t_final: f64,
    completed: bool,
) -> DriftReport {
    let mut max_h3_rel_std = 0.0f64;
    let mut max_h4_std = 0.0f64;
    let mut preserved = true;
    for rec in records {
        let h3_rel = rec.h3_std / (1.0 + rec.h3_mean.abs());
        max_h3_rel_std = max_h3_rel_std.max(rec.h3_std / rec.h3_mean.abs().max(1e-300));
        max_h4_std = max_h4_std.max(rec.h4_std);
        let h4_rel = rec.h4_std / (1.0 + rec.h4_mean.abs());
        if h3_rel > tol || h4_rel > tol {
            preserved = false;
        }
    }
    // least-squares slope of h3_std against t over the initial quarter
    let t_cut = records.first().map(|r| r.t).unwrap_or(0.0) + 0.25 * t_final;
    let early: Vec<&MonitorRecord> = records.iter().filter(|r| r.t <= t_cut).collect();
    let pts: Vec<&MonitorRecord> = if early.len() >= 2 {
        early
    } else {
        records.iter().collect()
    };
    let drift_rate = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mean_t = pts.iter().map(|r| r.t).sum::<f64>() / n;
        let mean_y = pts.iter().map(|r| r.h3_std).sum::<f64>() / n;
        let mut num = 0.0;
        let mut den = 0.0;
        for r in &pts {
            num += (r.t - mean_t) * (r.h3_std - mean_y);
            den += (r.t - mean_t) * (r.t - mean_t);
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    } else {
        0.0
    };
    DriftReport {
        variant,
        preserved_within_tol: preserved,
        drift_rate,
        max_h3_rel_std,
        max_h4_std,
        tol,
        t_final,
        completed,
    }
}

/// Run the flow from a type-II metric and measure Vaisman drift.
pub fn vaisman_drift_experiment(
    initial: HermitianMetricField,
    spec: &FlowRunSpec,
    tol: f64,
) -> Result<(DriftReport, RunOutcome), FlowError> {
    let outcome = run(initial, spec)?;
    let report = drift_report_from_records(
        &outcome.records,
        spec.variant,
        tol,
        outcome.final_state.t,
        outcome.termination.completed(),
    );
    Ok((report, outcome))
}
