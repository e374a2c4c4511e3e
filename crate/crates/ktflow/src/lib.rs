//! Simulation library for T²-invariant Hermitian geometry on the
//! Kodaira–Thurston surface: invariant exterior calculus over spectral
//! scalar fields, the Lee form and Chern/Bismut Ricci forms, Vaisman
//! classification, type I/II deformations, and the pluriclosed flow
//! ∂ₜω = −(ρ^B)^{1,1} with analytic oracles and a release-gate verification
//! suite.
//!
//! The coframe is e¹ = dy, e² = dx, e³ = dw, e⁴ = dz − x dy with
//! de⁴ = e¹² and complex structure Je¹ = e², Je³ = e⁴; metric coefficients
//! are unit-periodic functions of the base coordinates (x, y), discretized on
//! an n×n grid with trigonometric spectral differentiation.

pub mod cli;
pub mod deform;
pub mod flow;
pub mod forms;
pub mod geometry;
pub mod grid;
pub mod jsonout;
pub mod metric;
pub mod verify;

pub use flow::{FlowRunSpec, FlowState, RhsVariant};
pub use forms::KForm;
pub use grid::{Axis, GridSpec, ScalarField};
pub use metric::{HermitianMetricField, Snapshot};
