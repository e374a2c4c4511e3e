//! Periodic scalar fields on the unit square and trigonometric spectral calculus.
//!
//! All metric coefficients in this crate are functions of the base coordinates
//! (x, y) with unit period in each, sampled on an n×n grid with
//! x = ix/n, y = iy/n and the value at (ix, iy) stored at index iy·n + ix.
//! Derivatives are Fourier spectral: exact for band-limited data, with the
//! Nyquist mode of the first derivative set to zero so real input stays real.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

/// Smallest supported grid; below this the Nyquist handling leaves too few
/// usable modes to be meaningful.
pub const MIN_GRID_N: usize = 8;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid size must be even and at least {MIN_GRID_N}, got {0}")]
    BadSize(usize),
    #[error("non-finite value {value} at grid point ({ix}, {iy})")]
    NonFinite { ix: usize, iy: usize, value: f64 },
    #[error("value count {got} does not match n² = {want}")]
    BadLength { got: usize, want: usize },
    #[error("grid size mismatch: {0} vs {1}")]
    SpecMismatch(usize, usize),
}

/// Uniform n×n sampling of the periodic unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    n: usize,
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self, GridError> {
        if n < MIN_GRID_N || n % 2 != 0 {
            return Err(GridError::BadSize(n));
        }
        Ok(Self { n })
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total sample count n².
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing Δx = 1/n.
    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Row-major storage index of the sample at (ix, iy).
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n + ix
    }

    pub fn x(&self, ix: usize) -> f64 {
        ix as f64 / self.n as f64
    }

    pub fn y(&self, iy: usize) -> f64 {
        iy as f64 / self.n as f64
    }
}

/// Differentiation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X => write!(f, "x"),
            Axis::Y => write!(f, "y"),
        }
    }
}

/// A real function on the periodic unit square, sampled per [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![0.0; spec.len()],
        }
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        Self {
            spec,
            values: vec![c; spec.len()],
        }
    }

    /// Sample a closure of (x, y) on the grid.
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = spec.n();
        let mut values = Vec::with_capacity(spec.len());
        for iy in 0..n {
            let y = spec.y(iy);
            for ix in 0..n {
                values.push(f(spec.x(ix), y));
            }
        }
        Self { spec, values }
    }

    /// Wrap raw samples, rejecting wrong lengths and non-finite entries.
    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != spec.len() {
            return Err(GridError::BadLength {
                got: values.len(),
                want: spec.len(),
            });
        }
        let field = Self { spec, values };
        field.check_finite()?;
        Ok(field)
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.spec.index(ix, iy)]
    }

    pub fn check_finite(&self) -> Result<(), GridError> {
        let n = self.spec.n();
        for (i, &v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(GridError::NonFinite {
                    ix: i % n,
                    iy: i / n,
                    value: v,
                });
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    ///
    /// Panics on spec mismatch: mixing grids is a programming error, not a
    /// runtime condition.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.spec, other.spec, "scalar fields on different grids");
        Self {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn div(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a / b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v)
    }

    pub fn add_scalar(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    /// max |f|.
    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }
}

/// Sample statistics of a field; std uses the population convention
/// (divide by n²) so a constant field has std exactly 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
}

/// Exact sample statistics in a fixed (sequential) summation order.
pub fn spatial_stats(f: &ScalarField) -> FieldStats {
    let vals = f.values();
    let len = vals.len() as f64;
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in vals {
        sum += v;
        min = min.min(v);
        max = max.max(v);
    }
    let mean = sum / len;
    let mut var = 0.0;
    for &v in vals {
        let d = v - mean;
        var += d * d;
    }
    FieldStats {
        mean,
        min,
        max,
        std: (var / len).sqrt(),
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// First-derivative spectral multipliers i·k with k = 2π·(signed mode),
/// Nyquist zeroed.
fn derivative_symbol(n: usize) -> Vec<Complex<f64>> {
    let mut sym = Vec::with_capacity(n);
    for j in 0..n {
        let mode = if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
        let k = if j == n / 2 {
            0.0
        } else {
            2.0 * std::f64::consts::PI * mode as f64
        };
        sym.push(Complex::new(0.0, k));
    }
    sym
}

/// Trigonometric spectral partial derivative along one axis.
///
/// Exact on band-limited data; the output has zero mean (the k = 0 bin is
/// annihilated by the symbol).
pub fn partial_derivative(f: &ScalarField, axis: Axis) -> Result<ScalarField, GridError> {
    f.check_finite()?;
    let n = f.spec().n();
    let fwd = plan(n, false);
    let inv = plan(n, true);
    let sym = derivative_symbol(n);
    let mut out = vec![0.0; f.spec().len()];
    let mut line = vec![Complex::new(0.0, 0.0); n];
    let norm = 1.0 / n as f64;
    for l in 0..n {
        for j in 0..n {
            let idx = match axis {
                Axis::X => f.spec().index(j, l),
                Axis::Y => f.spec().index(l, j),
            };
            line[j] = Complex::new(f.values()[idx], 0.0);
        }
        fwd.process(&mut line);
        for j in 0..n {
            line[j] *= sym[j];
        }
        inv.process(&mut line);
        for j in 0..n {
            let idx = match axis {
                Axis::X => f.spec().index(j, l),
                Axis::Y => f.spec().index(l, j),
            };
            out[idx] = line[j].re * norm;
        }
    }
    Ok(ScalarField {
        spec: f.spec(),
        values: out,
    })
}

/// Δf = ∂ₓ∂ₓf + ∂_y∂_yf, composed from [`partial_derivative`] so the Nyquist
/// convention matches the first derivative exactly.
pub fn laplacian(f: &ScalarField) -> Result<ScalarField, GridError> {
    let fxx = partial_derivative(&partial_derivative(f, Axis::X)?, Axis::X)?;
    let fyy = partial_derivative(&partial_derivative(f, Axis::Y)?, Axis::Y)?;
    Ok(fxx.add(&fyy))
}

/// Second-order centered finite differences behind the same interface,
/// used as an independent cross-check of the spectral path.
pub mod fd {
    use super::{Axis, ScalarField};

    pub fn partial_derivative(f: &ScalarField, axis: Axis) -> ScalarField {
        let spec = f.spec();
        let n = spec.n();
        let inv2dx = 0.5 * n as f64;
        let mut out = vec![0.0; spec.len()];
        for iy in 0..n {
            for ix in 0..n {
                let (plus, minus) = match axis {
                    Axis::X => (spec.index((ix + 1) % n, iy), spec.index((ix + n - 1) % n, iy)),
                    Axis::Y => (spec.index(ix, (iy + 1) % n), spec.index(ix, (iy + n - 1) % n)),
                };
                out[spec.index(ix, iy)] = (f.values()[plus] - f.values()[minus]) * inv2dx;
            }
        }
        ScalarField::from_values(spec, out).expect("finite input gives finite differences")
    }
}
