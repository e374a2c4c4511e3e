//! The T²-invariant Hermitian metric family on the Kodaira–Thurston surface.
//!
//! A member is determined by fields r, s > 0 and u = u₁ + iu₂ with
//! rs − |u|² > 0; its fundamental form is
//! ω = r e¹² + s e³⁴ + u₁(e¹³ + e²⁴) + u₂(e¹⁴ − e²³),
//! and in the frame (e₁…e₄) the metric matrix has g(e₁,e₁) = g(e₂,e₂) = r,
//! g(e₃,e₃) = g(e₄,e₄) = s, g(e₁,e₃) = u₂ = g(e₂,e₄),
//! g(e₁,e₄) = −u₁ = −g(e₂,e₃).
//!
//! The metric is pluriclosed exactly when s is constant; s is nevertheless
//! stored as a field so the detector can reject nonconstant input.

use std::io::Write;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::forms::{FormsError, KForm};
use crate::grid::{self, FieldStats, GridError, GridSpec, ScalarField};
use crate::jsonout;

/// Tolerance for the family-shape gate in [`HermitianMetricField::from_two_form`].
pub const SHAPE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric not positive at grid point ({ix}, {iy}): r = {r}, s = {s}, rs - |u|² = {f}")]
    NotPositive { ix: usize, iy: usize, r: f64, s: f64, f: f64 },
    #[error("2-form not J-compatible in family: {0}")]
    NotInFamily(String),
    #[error("metric is not pluriclosed (residual {residual:.3e} > tol {tol:.3e})")]
    NotPluriclosed { residual: f64, tol: f64 },
    #[error("|θ|² not bounded away from zero (min {0:.3e})")]
    DegenerateNorm(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error("snapshot: {0}")]
    Snapshot(String),
}

/// A valid member of the metric family (positivity checked at construction).
#[derive(Debug, Clone)]
pub struct HermitianMetricField {
    r: ScalarField,
    s: ScalarField,
    u1: ScalarField,
    u2: ScalarField,
}

impl HermitianMetricField {
    pub fn new(
        r: ScalarField,
        s: ScalarField,
        u1: ScalarField,
        u2: ScalarField,
    ) -> Result<Self, MetricError> {
        for f in [&r, &s, &u1, &u2] {
            f.check_finite()?;
        }
        let spec = r.spec();
        let n = spec.n();
        for iy in 0..n {
            for ix in 0..n {
                let (rv, sv) = (r.at(ix, iy), s.at(ix, iy));
                let (a, b) = (u1.at(ix, iy), u2.at(ix, iy));
                let f = rv * sv - a * a - b * b;
                if rv <= 0.0 || sv <= 0.0 || f <= 0.0 {
                    return Err(MetricError::NotPositive { ix, iy, r: rv, s: sv, f });
                }
            }
        }
        Ok(Self { r, s, u1, u2 })
    }

    /// Spatially constant member.
    pub fn constant(spec: GridSpec, r0: f64, s0: f64, u0: (f64, f64)) -> Result<Self, MetricError> {
        Self::new(
            ScalarField::constant(spec, r0),
            ScalarField::constant(spec, s0),
            ScalarField::constant(spec, u0.0),
            ScalarField::constant(spec, u0.1),
        )
    }

    /// The standard structure ω = e¹² + e³⁴ (r = s = 1, u = 0).
    pub fn standard(spec: GridSpec) -> Self {
        Self::constant(spec, 1.0, 1.0, (0.0, 0.0)).expect("standard metric is positive")
    }

    pub fn spec(&self) -> GridSpec {
        self.r.spec()
    }

    pub fn r(&self) -> &ScalarField {
        &self.r
    }

    pub fn s(&self) -> &ScalarField {
        &self.s
    }

    pub fn u1(&self) -> &ScalarField {
        &self.u1
    }

    pub fn u2(&self) -> &ScalarField {
        &self.u2
    }

    /// Determinant function F = rs − u₁² − u₂² (positive on valid members).
    pub fn det_function(&self) -> ScalarField {
        self.r
            .mul(&self.s)
            .sub(&self.u1.mul(&self.u1))
            .sub(&self.u2.mul(&self.u2))
    }

    /// ω = r e¹² + s e³⁴ + u₁(e¹³ + e²⁴) + u₂(e¹⁴ − e²³).
    pub fn fundamental_form(&self) -> KForm {
        KForm::from_basis(&[1, 2], self.r.clone())
            .add(&KForm::from_basis(&[3, 4], self.s.clone()))
            .add(&KForm::from_basis(&[1, 3], self.u1.clone()))
            .add(&KForm::from_basis(&[2, 4], self.u1.clone()))
            .add(&KForm::from_basis(&[1, 4], self.u2.clone()))
            .add(&KForm::from_basis(&[2, 3], self.u2.neg()))
    }

    /// Inverse of [`Self::fundamental_form`] on the family.
    ///
    /// Requires coeff(e¹³) = coeff(e²⁴) and coeff(e¹⁴) = −coeff(e²³) within
    /// [`SHAPE_TOL`], then validates positivity.
    pub fn from_two_form(beta: &KForm) -> Result<Self, MetricError> {
        if beta.degree() != 2 {
            return Err(MetricError::NotInFamily(format!(
                "expected a 2-form, got degree {}",
                beta.degree()
            )));
        }
        let scale = 1.0 + beta.norm_inf();
        let d13 = beta.coeff(&[1, 3]).sub(beta.coeff(&[2, 4])).norm_inf();
        if d13 > SHAPE_TOL * scale {
            return Err(MetricError::NotInFamily(format!(
                "coeff(e13) differs from coeff(e24) by {d13:.3e}"
            )));
        }
        let d14 = beta.coeff(&[1, 4]).add(beta.coeff(&[2, 3])).norm_inf();
        if d14 > SHAPE_TOL * scale {
            return Err(MetricError::NotInFamily(format!(
                "coeff(e14) differs from -coeff(e23) by {d14:.3e}"
            )));
        }
        Self::new(
            beta.coeff(&[1, 2]).clone(),
            beta.coeff(&[3, 4]).clone(),
            beta.coeff(&[1, 3]).clone(),
            beta.coeff(&[1, 4]).clone(),
        )
    }

    /// Frame-component matrix of g at one grid point.
    pub fn matrix_at(&self, ix: usize, iy: usize) -> [[f64; 4]; 4] {
        let r = self.r.at(ix, iy);
        let s = self.s.at(ix, iy);
        let u1 = self.u1.at(ix, iy);
        let u2 = self.u2.at(ix, iy);
        [
            [r, 0.0, u2, -u1],
            [0.0, r, u1, u2],
            [u2, u1, s, 0.0],
            [-u1, u2, 0.0, s],
        ]
    }

    /// Pluriclosed detector: residual = max(‖Δs‖∞, ‖s − mean s‖∞).
    ///
    /// The mean-deviation term closes the discrete kernel of Δ at machine
    /// precision; the tolerance scales with ‖s‖∞ so the verdict is
    /// resolution-independent.
    pub fn pluriclosed_residual(&self) -> PluriclosedCheck {
        let lap = grid::laplacian(&self.s).expect("valid metric fields are finite");
        let stats = grid::spatial_stats(&self.s);
        let dev = self.s.add_scalar(-stats.mean).norm_inf();
        let residual = lap.norm_inf().max(dev);
        let tol = 1e-9 * (1.0 + self.s.norm_inf());
        PluriclosedCheck {
            residual,
            tol,
            is_pluriclosed: residual <= tol,
        }
    }

    /// Reject non-pluriclosed metrics; returns the constant value of s.
    pub fn require_pluriclosed(&self) -> Result<f64, MetricError> {
        let check = self.pluriclosed_residual();
        if !check.is_pluriclosed {
            return Err(MetricError::NotPluriclosed {
                residual: check.residual,
                tol: check.tol,
            });
        }
        Ok(grid::spatial_stats(&self.s).mean)
    }

    /// Pointwise |θ|²_g = θᵀ G⁻¹ θ for a 1-form θ = h₁e¹ + … + h₄e⁴.
    ///
    /// Uses the closed-form block inverse
    /// G⁻¹ = (1/F) [[s·I, −A], [−Aᵀ, r·I]] with A = u₂·I + u₁·J₂.
    pub fn one_form_norm_squared(&self, theta: &KForm) -> Result<ScalarField, MetricError> {
        if theta.degree() != 1 {
            return Err(MetricError::Forms(FormsError::WrongDegree {
                want: 1,
                got: theta.degree(),
            }));
        }
        let h1 = theta.coeff(&[1]);
        let h2 = theta.coeff(&[2]);
        let h3 = theta.coeff(&[3]);
        let h4 = theta.coeff(&[4]);
        let f = self.det_function();
        // s(h1²+h2²) + r(h3²+h4²) − 2[h1(u2h3−u1h4) + h2(u1h3+u2h4)]
        let base_part = self.s.mul(&h1.mul(h1).add(&h2.mul(h2)));
        let fiber_part = self.r.mul(&h3.mul(h3).add(&h4.mul(h4)));
        let cross1 = h1.mul(&self.u2.mul(h3).sub(&self.u1.mul(h4)));
        let cross2 = h2.mul(&self.u1.mul(h3).add(&self.u2.mul(h4)));
        let num = base_part.add(&fiber_part).sub(&cross1.add(&cross2).scale(2.0));
        Ok(num.div(&f))
    }
}

/// Outcome of the pluriclosed detector.
#[derive(Debug, Clone, Copy)]
pub struct PluriclosedCheck {
    pub residual: f64,
    pub tol: f64,
    pub is_pluriclosed: bool,
}

/// One saved metric state: `{version:1, t, n, s, r:[n²], u1:[n²], u2:[n²]}`,
/// row-major per the grid convention. `s` is written as a scalar when the
/// field is constant (always the case along flows) and accepted as either a
/// scalar or an n² array on read.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub metric: HermitianMetricField,
}

#[derive(Deserialize)]
struct RawSnapshot {
    version: u32,
    t: f64,
    n: usize,
    s: ScalarOrField,
    r: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScalarOrField {
    Scalar(f64),
    Field(Vec<f64>),
}

impl Snapshot {
    pub fn new(metric: HermitianMetricField, t: f64) -> Self {
        Self { t, metric }
    }

    pub fn to_json(&self) -> String {
        let m = &self.metric;
        let n = m.spec().n();
        let s_vals = m.s().values();
        let s_is_const = s_vals.iter().all(|v| v.to_bits() == s_vals[0].to_bits());
        let s_json = if s_is_const {
            jsonout::float(s_vals[0])
        } else {
            jsonout::float_array(s_vals)
        };
        format!(
            "{{\"version\":1,\"t\":{},\"n\":{},\"s\":{},\"r\":{},\"u1\":{},\"u2\":{}}}\n",
            jsonout::float(self.t),
            n,
            s_json,
            jsonout::float_array(m.r().values()),
            jsonout::float_array(m.u1().values()),
            jsonout::float_array(m.u2().values()),
        )
    }

    pub fn write(&self, path: &Path) -> Result<(), MetricError> {
        let mut file = std::fs::File::create(path)
            .map_err(|e| MetricError::Snapshot(format!("create {}: {e}", path.display())))?;
        file.write_all(self.to_json().as_bytes())
            .map_err(|e| MetricError::Snapshot(format!("write {}: {e}", path.display())))?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, MetricError> {
        let raw: RawSnapshot = serde_json::from_str(text)
            .map_err(|e| MetricError::Snapshot(format!("parse error: {e}")))?;
        if raw.version != 1 {
            return Err(MetricError::Snapshot(format!(
                "unsupported snapshot version {}",
                raw.version
            )));
        }
        let spec = GridSpec::new(raw.n)?;
        let s = match raw.s {
            ScalarOrField::Scalar(v) => ScalarField::constant(spec, v),
            ScalarOrField::Field(vals) => ScalarField::from_values(spec, vals)?,
        };
        let metric = HermitianMetricField::new(
            ScalarField::from_values(spec, raw.r)?,
            s,
            ScalarField::from_values(spec, raw.u1)?,
            ScalarField::from_values(spec, raw.u2)?,
        )?;
        Ok(Self { t: raw.t, metric })
    }

    pub fn read(path: &Path) -> Result<Self, MetricError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MetricError::Snapshot(format!("read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Convenience: statistics of a scalar field (re-export pattern used by
/// report builders).
pub fn stats(f: &ScalarField) -> FieldStats {
    grid::spatial_stats(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn spec() -> GridSpec {
        GridSpec::new(16).unwrap()
    }

    #[test]
    fn fundamental_form_of_standard() {
        let m = HermitianMetricField::standard(spec());
        let w = m.fundamental_form();
        let expected = KForm::from_basis_const(spec(), &[1, 2], 1.0)
            .add(&KForm::from_basis_const(spec(), &[3, 4], 1.0));
        assert_eq!(w.sub(&expected).norm_inf(), 0.0);
    }

    #[test]
    fn fundamental_form_scaling_and_coefficients() {
        let m = HermitianMetricField::constant(spec(), 2.0, 4.0, (0.0, 0.0)).unwrap();
        let w = m.fundamental_form();
        assert_eq!(w.coeff(&[1, 2]).norm_inf(), 2.0);
        assert_eq!(w.coeff(&[3, 4]).norm_inf(), 4.0);
        // lexicographic coefficient pattern (r, u1, u2, −u2, u1, s)
        let m2 = HermitianMetricField::constant(spec(), 2.0, 4.0, (0.25, 0.5)).unwrap();
        let w2 = m2.fundamental_form();
        assert_eq!(w2.coeff(&[1, 3]).at(0, 0), 0.25);
        assert_eq!(w2.coeff(&[2, 4]).at(0, 0), 0.25);
        assert_eq!(w2.coeff(&[1, 4]).at(0, 0), 0.5);
        assert_eq!(w2.coeff(&[2, 3]).at(0, 0), -0.5);
    }

    #[test]
    fn invalid_metric_reports_first_failing_point() {
        let s = spec();
        let r = ScalarField::from_fn(s, |x, _| 1.0 - 1.5 * x); // dips below zero
        let err = HermitianMetricField::new(
            r,
            ScalarField::constant(s, 1.0),
            ScalarField::zeros(s),
            ScalarField::zeros(s),
        )
        .unwrap_err();
        match err {
            MetricError::NotPositive { ix, iy, .. } => {
                assert_eq!(iy, 0);
                // first x with 1 − 1.5x ≤ 0 is x = 11/16
                assert_eq!(ix, 11);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn round_trip_two_form() {
        let s = spec();
        let m = HermitianMetricField::new(
            ScalarField::from_fn(s, |x, y| 2.0 + 0.1 * (2.0 * PI * (x + y)).cos()),
            ScalarField::constant(s, 1.5),
            ScalarField::from_fn(s, |x, _| 0.1 * (2.0 * PI * x).sin()),
            ScalarField::from_fn(s, |_, y| 0.05 * (2.0 * PI * y).cos()),
        )
        .unwrap();
        let back = HermitianMetricField::from_two_form(&m.fundamental_form()).unwrap();
        for (a, b) in [
            (m.r(), back.r()),
            (m.s(), back.s()),
            (m.u1(), back.u1()),
            (m.u2(), back.u2()),
        ] {
            assert!(a.sub(b).norm_inf() <= 1e-12);
        }
    }

    #[test]
    fn from_two_form_reads_u2_from_e14() {
        let s = spec();
        let a = 0.1;
        let beta = KForm::from_basis_const(s, &[1, 2], 2.0)
            .add(&KForm::from_basis_const(s, &[3, 4], 4.0))
            .add(&KForm::from_basis_const(s, &[1, 4], -a))
            .add(&KForm::from_basis_const(s, &[2, 3], a));
        let m = HermitianMetricField::from_two_form(&beta).unwrap();
        assert_eq!(m.u2().at(0, 0), -a);
        assert_eq!(m.u1().norm_inf(), 0.0);
        let again = m.fundamental_form();
        assert_eq!(again.sub(&beta).norm_inf(), 0.0);
    }

    #[test]
    fn from_two_form_shape_gate() {
        let s = spec();
        let beta = KForm::from_basis_const(s, &[1, 2], 1.0)
            .add(&KForm::from_basis_const(s, &[3, 4], 1.0))
            .add(&KForm::from_basis_const(s, &[1, 3], 0.1)); // e24 missing
        assert!(matches!(
            HermitianMetricField::from_two_form(&beta),
            Err(MetricError::NotInFamily(_))
        ));
    }

    #[test]
    fn det_function_values() {
        let s = spec();
        assert_eq!(
            HermitianMetricField::constant(s, 1.0, 1.0, (0.0, 0.0))
                .unwrap()
                .det_function()
                .at(3, 5),
            1.0
        );
        assert_eq!(
            HermitianMetricField::constant(s, 2.0, 1.0, (0.0, 0.0))
                .unwrap()
                .det_function()
                .at(0, 0),
            2.0
        );
    }

    #[test]
    fn pluriclosed_detector() {
        let s = GridSpec::new(32).unwrap();
        let constant = HermitianMetricField::constant(s, 1.7, 1.0, (0.2, -0.1)).unwrap();
        let check = constant.pluriclosed_residual();
        assert!(check.is_pluriclosed);
        assert!(check.residual <= 1e-12);

        let wavy_s = ScalarField::from_fn(s, |_, y| 1.0 + 0.1 * (2.0 * PI * y).cos());
        let bad = HermitianMetricField::new(
            ScalarField::constant(s, 2.0),
            wavy_s,
            ScalarField::zeros(s),
            ScalarField::zeros(s),
        )
        .unwrap();
        let check = bad.pluriclosed_residual();
        assert!(!check.is_pluriclosed);
        assert!(check.residual >= 0.1);

        // nonconstant r and u do not affect the verdict
        let mixed = HermitianMetricField::new(
            ScalarField::from_fn(s, |x, _| 2.0 + 0.3 * (2.0 * PI * x).cos()),
            ScalarField::constant(s, 1.0),
            ScalarField::from_fn(s, |_, y| 0.2 * (2.0 * PI * y).sin()),
            ScalarField::zeros(s),
        )
        .unwrap();
        assert!(mixed.pluriclosed_residual().is_pluriclosed);
    }

    #[test]
    fn one_form_norms() {
        let s = spec();
        let m = HermitianMetricField::standard(s);
        let theta = KForm::from_basis_const(s, &[3], -1.0);
        let norm = m.one_form_norm_squared(&theta).unwrap();
        assert!(norm.add_scalar(-1.0).norm_inf() <= 1e-14);

        let m2 = HermitianMetricField::constant(s, 2.0, 4.0, (0.0, 0.0)).unwrap();
        let theta2 = KForm::from_basis_const(s, &[3], -2.0);
        let norm2 = m2.one_form_norm_squared(&theta2).unwrap();
        assert!(norm2.add_scalar(-1.0).norm_inf() <= 1e-14);
    }

    #[test]
    fn positivity_matches_eigenvalue_oracle() {
        // G has eigenvalues ((r+s) ± √((r−s)² + 4|u|²))/2, each twice;
        // positive-definite ⇔ r > 0 and rs − |u|² > 0.
        let mut rng = StdRng::seed_from_u64(100);
        let s = spec();
        let mut seen_valid = 0;
        let mut seen_invalid = 0;
        for _ in 0..200 {
            let r0: f64 = rng.gen_range(0.05..2.0);
            let s0: f64 = rng.gen_range(0.05..2.0);
            let a: f64 = rng.gen_range(-1.2..1.2);
            let b: f64 = rng.gen_range(-1.2..1.2);
            let disc = ((r0 - s0) * (r0 - s0) + 4.0 * (a * a + b * b)).sqrt();
            let lam_min = 0.5 * (r0 + s0 - disc);
            let valid = HermitianMetricField::constant(s, r0, s0, (a, b)).is_ok();
            assert_eq!(valid, lam_min > 0.0, "r={r0} s={s0} u=({a},{b})");
            if valid {
                seen_valid += 1;
            } else {
                seen_invalid += 1;
            }
        }
        assert!(seen_valid > 20 && seen_invalid > 20);
    }

    #[test]
    fn metric_matrix_duality() {
        let s = spec();
        let m =
            HermitianMetricField::constant(s, 2.0, 1.5, (0.3, -0.2)).unwrap();
        let g = m.matrix_at(0, 0);
        // symmetric
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(g[i][j], g[j][i]);
            }
        }
        assert_eq!(g[0][0], 2.0);
        assert_eq!(g[2][2], 1.5);
        assert_eq!(g[0][2], -0.2);
        assert_eq!(g[1][2], 0.3);
        assert_eq!(g[0][3], -0.3);
    }

    #[test]
    fn snapshot_round_trip_exact() {
        let s = spec();
        let m = HermitianMetricField::new(
            ScalarField::from_fn(s, |x, y| 2.0 + 0.25 * (2.0 * PI * (x - y)).sin()),
            ScalarField::constant(s, 1.0 / 3.0),
            ScalarField::from_fn(s, |x, _| 0.01 * (4.0 * PI * x).cos()),
            ScalarField::zeros(s),
        )
        .unwrap();
        let snap = Snapshot::new(m, 0.125);
        let text = snap.to_json();
        let back = Snapshot::from_json(&text).unwrap();
        assert_eq!(back.t, 0.125);
        for (a, b) in [
            (snap.metric.r(), back.metric.r()),
            (snap.metric.s(), back.metric.s()),
            (snap.metric.u1(), back.metric.u1()),
            (snap.metric.u2(), back.metric.u2()),
        ] {
            assert_eq!(a.values(), b.values(), "bitwise snapshot round trip");
        }
        // constant s serializes as a scalar
        assert!(text.contains("\"s\":3.33"));
        // and writing twice is byte-identical
        assert_eq!(text, Snapshot::from_json(&text).unwrap().to_json());
    }

    #[test]
    fn snapshot_accepts_field_s() {
        let s = spec();
        let n = s.n();
        let mut sv = vec![1.0; s.len()];
        sv[0] = 1.5;
        let body = format!(
            "{{\"version\":1,\"t\":0.0,\"n\":{n},\"s\":{},\"r\":{},\"u1\":{},\"u2\":{}}}",
            jsonout::float_array(&sv),
            jsonout::float_array(&vec![2.0; s.len()]),
            jsonout::float_array(&vec![0.0; s.len()]),
            jsonout::float_array(&vec![0.0; s.len()]),
        );
        let snap = Snapshot::from_json(&body).unwrap();
        assert!(!snap.metric.pluriclosed_residual().is_pluriclosed);
    }

    #[test]
    fn pluriclosed_cross_check_against_forms_stack() {
        // d(J(dω)) = Δs·e¹²³⁴, so the detector verdict matches the vanishing
        // of the s-dependent 4-form component.
        let mut rng = StdRng::seed_from_u64(2024);
        let s = GridSpec::new(16).unwrap();
        for trial in 0..100 {
            let pluriclosed = trial % 2 == 0;
            let amp = 0.05;
            let s_field = if pluriclosed {
                ScalarField::constant(s, rng.gen_range(0.5..2.0))
            } else {
                let base: f64 = rng.gen_range(0.8..1.5);
                let a: f64 = rng.gen_range(0.02..amp);
                let phase: f64 = rng.gen_range(0.0..2.0 * PI);
                ScalarField::from_fn(s, |x, y| {
                    base + a * (2.0 * PI * (x + 2.0 * y) + phase).cos()
                })
            };
            let m = HermitianMetricField::new(
                ScalarField::from_fn(s, |x, y| 2.0 + 0.1 * (2.0 * PI * (x + y)).cos()),
                s_field,
                ScalarField::from_fn(s, |x, _| 0.05 * (2.0 * PI * x).sin()),
                ScalarField::from_fn(s, |_, y| 0.05 * (2.0 * PI * y).cos()),
            )
            .unwrap();
            let d_omega = forms::exterior_derivative(&m.fundamental_form()).unwrap();
            let jd = forms::apply_j(&d_omega);
            let djd = forms::exterior_derivative(&jd).unwrap();
            let top = djd.coeff(&[1, 2, 3, 4]).norm_inf();
            let verdict = m.pluriclosed_residual().is_pluriclosed;
            if verdict {
                assert!(top <= 1e-9, "trial {trial}: top component {top}");
            } else {
                assert!(top > 1e-4, "trial {trial}: top component {top}");
            }
        }
    }
}
