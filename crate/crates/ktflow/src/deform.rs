//! Constructors of Vaisman structures: normalized reconstruction from the Lee
//! form, type I and type II deformations, and the non-constant-scalar-curvature
//! example generator.
//!
//! Type I (base ω = e¹² + e³⁴, θ = −e³): θ̃ = bθ + α with constant
//! α = a₁e¹ + a₂e² (harmonic and pointwise orthogonal to θ, Jθ for this flat
//! base), ω̃ = θ̃∧Jθ̃ − dJθ̃.
//!
//! Type II: for f = f(x, y) with 1 − f_xx − f_yy > 0,
//! ω̃ = |θ|²ω + θ∧Jdf + df∧Jθ + df∧Jdf − ddᶜf; on the standard base this
//! collapses to the closed form
//! (1 + f_x² + f_y² − f_xx − f_yy)e¹² + e³⁴ − f_x(e¹³+e²⁴) − f_y(e¹⁴−e²³),
//! with θ̃ = −e³ + df. Both code paths are kept and compared.

use thiserror::Error;

use crate::forms::{self, FormsError, KForm};
use crate::geometry::{self, GeometryError, HFactor};
use crate::grid::{self, Axis, GridError, GridSpec, ScalarField};
use crate::metric::{HermitianMetricField, MetricError};

/// Reconstruction/type-I |θ|² floor.
const NORM_FLOOR: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum DeformError {
    #[error("inadmissible profile: min(1 - f_xx - f_yy) = {margin:.6} <= 0")]
    Inadmissible { margin: f64 },
    #[error("type I requires b > 0, got {0}")]
    BadScale(f64),
    #[error("|θ|² not bounded away from zero (min {0:.3e})")]
    DegenerateNorm(f64),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("profile file: {0}")]
    Profile(String),
}

/// A type-II potential with its admissibility margin.
#[derive(Debug, Clone)]
pub struct DeformProfile {
    pub name: String,
    pub f: ScalarField,
    pub eps: Option<f64>,
    /// min over grid samples of 1 − f_xx − f_yy. Inter-sample violation is
    /// possible for near-critical profiles; presets keep margin ≥ 0.2.
    pub margin: f64,
}

impl DeformProfile {
    pub fn from_field(name: impl Into<String>, f: ScalarField, eps: Option<f64>) -> Result<Self, DeformError> {
        let fxx = grid::partial_derivative(&grid::partial_derivative(&f, Axis::X)?, Axis::X)?;
        let fyy = grid::partial_derivative(&grid::partial_derivative(&f, Axis::Y)?, Axis::Y)?;
        let margin = 1.0 - fxx.add(&fyy).max();
        Ok(Self {
            name: name.into(),
            f,
            eps,
            margin,
        })
    }

    pub fn is_admissible(&self) -> bool {
        self.margin > 0.0
    }

    pub fn require_admissible(&self) -> Result<(), DeformError> {
        if self.is_admissible() {
            Ok(())
        } else {
            Err(DeformError::Inadmissible { margin: self.margin })
        }
    }
}

/// f = ε·cos(2πx).
pub fn profile_one_mode(spec: GridSpec, eps: f64) -> Result<DeformProfile, DeformError> {
    let f = ScalarField::from_fn(spec, |x, _| eps * (2.0 * std::f64::consts::PI * x).cos());
    DeformProfile::from_field(format!("one-mode({eps})"), f, Some(eps))
}

/// f = ε·(cos(2πx) + cos(2πy)).
pub fn profile_two_mode(spec: GridSpec, eps: f64) -> Result<DeformProfile, DeformError> {
    let f = ScalarField::from_fn(spec, |x, y| {
        let two_pi = 2.0 * std::f64::consts::PI;
        eps * ((two_pi * x).cos() + (two_pi * y).cos())
    });
    DeformProfile::from_field(format!("two-mode({eps})"), f, Some(eps))
}

/// ω = (θ∧Jθ − dJθ)/|θ|²; for a Vaisman pair this reproduces the fundamental
/// form of `m`.
pub fn normalized_reconstruct(
    theta: &KForm,
    m: &HermitianMetricField,
) -> Result<KForm, DeformError> {
    let norm_sq = m.one_form_norm_squared(theta)?;
    let floor = norm_sq.min();
    if floor <= NORM_FLOOR {
        return Err(DeformError::DegenerateNorm(floor));
    }
    let j_theta = forms::apply_j(theta);
    let pairing = forms::wedge(theta, &j_theta)?;
    let dj = forms::exterior_derivative(&j_theta)?;
    Ok(pairing.sub(&dj).scale_field(&norm_sq.map(|v| 1.0 / v)))
}

/// Type-I deformation of the standard structure: θ̃ = −b e³ + a₁e¹ + a₂e².
pub fn type_one_deform(
    spec: GridSpec,
    b: f64,
    a1: f64,
    a2: f64,
) -> Result<HermitianMetricField, DeformError> {
    if b <= 0.0 {
        return Err(DeformError::BadScale(b));
    }
    let theta = KForm::from_basis_const(spec, &[3], -b)
        .add(&KForm::from_basis_const(spec, &[1], a1))
        .add(&KForm::from_basis_const(spec, &[2], a2));
    let j_theta = forms::apply_j(&theta);
    let omega = forms::wedge(&theta, &j_theta)?.sub(&forms::exterior_derivative(&j_theta)?);
    Ok(HermitianMetricField::from_two_form(&omega)?)
}

/// Type-II deformation of the standard base via the closed form.
pub fn type_two_deform(profile: &DeformProfile) -> Result<HermitianMetricField, DeformError> {
    profile.require_admissible()?;
    let f = &profile.f;
    let fx = grid::partial_derivative(f, Axis::X)?;
    let fy = grid::partial_derivative(f, Axis::Y)?;
    let fxx = grid::partial_derivative(&fx, Axis::X)?;
    let fyy = grid::partial_derivative(&fy, Axis::Y)?;
    let r = fx
        .mul(&fx)
        .add(&fy.mul(&fy))
        .sub(&fxx)
        .sub(&fyy)
        .add_scalar(1.0);
    Ok(HermitianMetricField::new(
        r,
        ScalarField::constant(f.spec(), 1.0),
        fx.neg(),
        fy.neg(),
    )?)
}

/// Type-II deformation of an arbitrary Vaisman base through the general
/// formula (independent code path from the closed form; also the composition
/// route when the base is a type-I output).
pub fn type_two_deform_general(
    f: &ScalarField,
    base: &HermitianMetricField,
) -> Result<HermitianMetricField, DeformError> {
    let lee = geometry::lee_form(base)?;
    let theta = lee.theta();
    let norm_sq = base.one_form_norm_squared(&theta)?;
    let omega = base.fundamental_form();
    let df = forms::exterior_derivative(&KForm::from_function(f.clone()))?;
    let j_df = forms::apply_j(&df);
    let j_theta = forms::apply_j(&theta);
    let ddc = forms::exterior_derivative(&forms::dc_function(f)?)?;
    let omega_new = omega
        .scale_field(&norm_sq)
        .add(&forms::wedge(&theta, &j_df)?)
        .add(&forms::wedge(&df, &j_theta)?)
        .add(&forms::wedge(&df, &j_df)?)
        .sub(&ddc);
    Ok(HermitianMetricField::from_two_form(&omega_new)?)
}

/// Outcome of the non-constant scalar-curvature construction.
#[derive(Debug)]
pub struct CurvatureExample {
    pub metric: HermitianMetricField,
    /// Conformal factor from the pointwise ratio ρ^C / d(Jθ).
    pub h_ratio: HFactor,
    /// The same factor from the closed form −½Δlog(1−f_xx−f_yy)/(−1+f_xx+f_yy).
    pub h_closed_form: HFactor,
    /// ‖ratio − closed form‖∞ over the common mask.
    pub route_difference: f64,
    pub non_constant: bool,
}

/// Build the type-II metric for `profile`, compute h two independent ways and
/// decide whether the scalar curvature is non-constant.
pub fn non_constant_curvature_example(
    profile: &DeformProfile,
) -> Result<CurvatureExample, DeformError> {
    let metric = type_two_deform(profile)?;
    let h_ratio = geometry::h_conformal_factor(&metric)?;

    let f = &profile.f;
    let fxx = grid::partial_derivative(&grid::partial_derivative(f, Axis::X)?, Axis::X)?;
    let fyy = grid::partial_derivative(&grid::partial_derivative(f, Axis::Y)?, Axis::Y)?;
    let g = fxx.add(&fyy).neg().add_scalar(1.0); // 1 − f_xx − f_yy
    let numer = grid::laplacian(&g.map(f64::ln))?.scale(-0.5);
    let denom = g.neg(); // −1 + f_xx + f_yy
    let h_closed_form = geometry::h_factor_ratio(&numer, &denom)?;

    let mut route_difference = 0.0f64;
    for i in 0..f.spec().len() {
        if h_ratio.mask[i] && h_closed_form.mask[i] {
            route_difference = route_difference
                .max((h_ratio.field.values()[i] - h_closed_form.field.values()[i]).abs());
        }
    }

    let stats = h_ratio.stats;
    let non_constant = if stats.mean.abs() > 1e-8 {
        stats.std / stats.mean.abs() > 0.01
    } else {
        stats.std > 1e-3
    };
    Ok(CurvatureExample {
        metric,
        h_ratio,
        h_closed_form,
        route_difference,
        non_constant,
    })
}
