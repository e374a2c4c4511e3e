//! Browser bindings for the interactive demo page.
//!
//! Three operations are exposed, each returning a JSON string the page
//! decodes: a type-II deformation explorer (fields + classification), a
//! pluriclosed-flow run (monitor time series), and an invariant-metric
//! analyzer. Compile for wasm32-unknown-unknown and bind with wasm-bindgen;
//! the functions are plain Rust on native targets, which is how they are
//! unit-tested.

use wasm_bindgen::prelude::wasm_bindgen;

use ktflow::deform;
use ktflow::flow::{self, FlowRunSpec, RhsVariant};
use ktflow::geometry;
use ktflow::grid::{self, GridSpec};
use ktflow::jsonout;
use ktflow::metric::HermitianMetricField;

fn err_json(message: impl std::fmt::Display) -> String {
    format!(
        "{{\"error\":{}}}",
        serde_json_escape(&message.to_string())
    )
}

fn serde_json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn field_json(f: &grid::ScalarField) -> String {
    jsonout::float_array(f.values())
}

/// Type-II deformation explorer: builds the metric for f = ε·cos(2πx)
/// (+ ε·cos(2πy) for the two-mode profile), classifies it and returns the
/// r-field, determinant field and conformal-factor field for heatmaps.
#[wasm_bindgen]
pub fn deform_preview(n: usize, eps: f64, two_mode: bool) -> String {
    let spec = match GridSpec::new(n) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let profile = match if two_mode {
        deform::profile_two_mode(spec, eps)
    } else {
        deform::profile_one_mode(spec, eps)
    } {
        Ok(p) => p,
        Err(e) => return err_json(e),
    };
    if !profile.is_admissible() {
        return format!(
            "{{\"admissible\":false,\"margin\":{}}}",
            jsonout::float(profile.margin)
        );
    }
    let metric = match deform::type_two_deform(&profile) {
        Ok(m) => m,
        Err(e) => return err_json(e),
    };
    let example = match deform::non_constant_curvature_example(&profile) {
        Ok(x) => x,
        Err(e) => return err_json(e),
    };
    let report = match geometry::analyze(&metric, geometry::DEFAULT_TOL) {
        Ok(r) => r,
        Err(e) => return err_json(e),
    };
    format!(
        concat!(
            "{{\"admissible\":true,\"margin\":{},\"n\":{},",
            "\"r\":{},\"det\":{},\"h\":{},",
            "\"h_mean\":{},\"h_std\":{},\"non_constant_curvature\":{},",
            "\"analysis\":{}}}"
        ),
        jsonout::float(profile.margin),
        n,
        field_json(metric.r()),
        field_json(&metric.det_function()),
        field_json(&example.h_ratio.field),
        jsonout::float(example.h_ratio.stats.mean),
        jsonout::float(example.h_ratio.stats.std),
        jsonout::bool(example.non_constant),
        report.to_json().trim_end(),
    )
}

/// Run the pluriclosed flow from an invariant or type-II start and return the
/// monitor time series for charting, plus the final r-field heatmap.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn flow_run(
    n: usize,
    preset: &str,
    r0: f64,
    u1: f64,
    u2: f64,
    eps: f64,
    t_end: f64,
    use_bismut: bool,
) -> String {
    let spec = match GridSpec::new(n) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let initial = match preset {
        "invariant" => HermitianMetricField::constant(spec, r0, 1.0, (u1, u2))
            .map_err(|e| e.to_string()),
        "type2" => deform::profile_one_mode(spec, eps)
            .and_then(|p| deform::type_two_deform(&p))
            .map_err(|e| e.to_string()),
        other => Err(format!("unknown preset '{other}'")),
    };
    let initial = match initial {
        Ok(m) => m,
        Err(e) => return err_json(e),
    };
    let run_spec = FlowRunSpec {
        t_end,
        safety: flow::DEFAULT_SAFETY,
        variant: if use_bismut {
            RhsVariant::Bismut
        } else {
            RhsVariant::NewSystem
        },
        monitor_every: monitor_cadence(n, t_end),
        snapshot_times: vec![],
    };
    let outcome = match flow::run(initial, &run_spec) {
        Ok(o) => o,
        Err(e) => return err_json(e),
    };
    let pick = |f: fn(&flow::MonitorRecord) -> f64| -> String {
        jsonout::float_array(&outcome.records.iter().map(f).collect::<Vec<_>>())
    };
    format!(
        concat!(
            "{{\"completed\":{},\"termination\":{},\"t\":{},\"r_mean\":{},",
            "\"f_min\":{},\"h3_mean\":{},\"h3_std\":{},\"h4_std\":{},",
            "\"u_drift\":{},\"r_final\":{},\"n\":{}}}"
        ),
        jsonout::bool(outcome.termination.completed()),
        serde_json_escape(&outcome.termination.reason()),
        pick(|r| r.t),
        pick(|r| r.r_mean),
        pick(|r| r.f_min),
        pick(|r| r.h3_mean),
        pick(|r| r.h3_std),
        pick(|r| r.h4_std),
        pick(|r| r.u_drift),
        field_json(outcome.final_state.metric.r()),
        n,
    )
}

/// Classify an invariant metric (r₀, s₀, u₀) and report its Lee data,
/// torsion coefficient and flow expansion rate.
#[wasm_bindgen]
pub fn analyze_invariant(n: usize, r0: f64, s0: f64, u1: f64, u2: f64) -> String {
    let spec = match GridSpec::new(n) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let metric = match HermitianMetricField::constant(spec, r0, s0, (u1, u2)) {
        Ok(m) => m,
        Err(e) => return err_json(e),
    };
    let report = match geometry::analyze(&metric, geometry::DEFAULT_TOL) {
        Ok(r) => r,
        Err(e) => return err_json(e),
    };
    let f0 = r0 * s0 - u1 * u1 - u2 * u2;
    let lee = match geometry::lee_form(&metric) {
        Ok(l) => l,
        Err(e) => return err_json(e),
    };
    let norm_sq = match metric.one_form_norm_squared(&lee.theta()) {
        Ok(v) => grid::spatial_stats(&v).mean,
        Err(e) => return err_json(e),
    };
    format!(
        concat!(
            "{{\"analysis\":{},\"F\":{},\"h3\":{},\"h4\":{},",
            "\"lee_norm_sq\":{},\"expansion_rate\":{}}}"
        ),
        report.to_json().trim_end(),
        jsonout::float(f0),
        jsonout::float(lee.h3_stats().mean),
        jsonout::float(lee.h4_stats().mean),
        jsonout::float(norm_sq),
        jsonout::float(s0 * s0 / f0),
    )
}

/// Keep chart payloads bounded: aim for ~200 records per run.
fn monitor_cadence(n: usize, t_end: f64) -> u64 {
    let dx = 1.0 / n as f64;
    let dt = flow::DEFAULT_SAFETY * dx * dx;
    let steps = (t_end / dt).ceil().max(1.0);
    ((steps / 200.0).ceil() as u64).max(1)
}
