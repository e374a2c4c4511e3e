//! Exterior algebra of T²-invariant forms on the coframe e¹…e⁴.
//!
//! The coframe satisfies de¹ = de² = de³ = 0 and de⁴ = e¹², with e¹ = dy and
//! e² = dx, so the differential of a coefficient a(x, y) is
//! da = a_x e² + a_y e¹. The complex structure acts on the coframe by
//! Je¹ = e², Je² = −e¹, Je³ = e⁴, Je⁴ = −e³ and extends to k-forms factorwise;
//! this convention is pinned by the worked displays J(−e³ + f_y e¹ + f_x e²) =
//! −e⁴ + f_y e² − f_x e¹ and ddᶜf = (f_xx + f_yy) e¹².
//!
//! Basis elements of each degree are ordered lexicographically:
//! 1-forms (e¹, e², e³, e⁴); 2-forms (e¹², e¹³, e¹⁴, e²³, e²⁴, e³⁴);
//! 3-forms (e¹²³, e¹²⁴, e¹³⁴, e²³⁴); the 4-form e¹²³⁴.

use thiserror::Error;

use crate::grid::{self, Axis, GridError, GridSpec, ScalarField};

#[derive(Debug, Error)]
pub enum FormsError {
    #[error("exterior derivative undefined on degree-4 forms")]
    TopDegree,
    #[error("wedge of degrees {0} and {1} exceeds the manifold dimension")]
    DegreeOverflow(usize, usize),
    #[error("operation requires degree {want}, got {got}")]
    WrongDegree { want: usize, got: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Number of basis elements per degree.
pub const BASIS_DIM: [usize; 5] = [1, 4, 6, 4, 1];

const BASIS_0: [&[u8]; 1] = [&[]];
const BASIS_1: [&[u8]; 4] = [&[1], &[2], &[3], &[4]];
const BASIS_2: [&[u8]; 6] = [&[1, 2], &[1, 3], &[1, 4], &[2, 3], &[2, 4], &[3, 4]];
const BASIS_3: [&[u8]; 4] = [&[1, 2, 3], &[1, 2, 4], &[1, 3, 4], &[2, 3, 4]];
const BASIS_4: [&[u8]; 1] = [&[1, 2, 3, 4]];

/// Sorted index tuples of the degree-k basis, in storage order.
pub fn basis(degree: usize) -> &'static [&'static [u8]] {
    match degree {
        0 => &BASIS_0,
        1 => &BASIS_1,
        2 => &BASIS_2,
        3 => &BASIS_3,
        4 => &BASIS_4,
        _ => unreachable!("degree out of range"),
    }
}

/// Storage position of a sorted index tuple within its degree.
fn basis_position(indices: &[u8]) -> usize {
    basis(indices.len())
        .iter()
        .position(|b| *b == indices)
        .expect("valid sorted basis tuple")
}

/// Wedge two strictly increasing index tuples: None if they share an index,
/// otherwise the permutation sign and the merged tuple.
fn wedge_indices(a: &[u8], b: &[u8]) -> Option<(f64, Vec<u8>)> {
    let mut merged: Vec<u8> = a.iter().chain(b.iter()).copied().collect();
    // count inversions of the concatenation (bubble sort sign)
    let mut sign = 1.0;
    let len = merged.len();
    for i in 0..len {
        for j in 0..len - 1 - i {
            if merged[j] == merged[j + 1] {
                return None;
            }
            if merged[j] > merged[j + 1] {
                merged.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    if merged.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((sign, merged))
}

/// Action of J on a single coframe index: (sign, image index).
fn j_index(i: u8) -> (f64, u8) {
    match i {
        1 => (1.0, 2),
        2 => (-1.0, 1),
        3 => (1.0, 4),
        4 => (-1.0, 3),
        _ => unreachable!("coframe index out of range"),
    }
}

/// Lie brackets of the dual frame: [e₁, e₂] = −e₄ (from de⁴ = e¹²), all other
/// brackets vanish; e₃ and e₄ are central. Returns the coefficients of
/// [e_i, e_j] on (e₁, e₂, e₃, e₄), with i, j ∈ 1..=4.
pub fn frame_bracket(i: usize, j: usize) -> [f64; 4] {
    match (i, j) {
        (1, 2) => [0.0, 0.0, 0.0, -1.0],
        (2, 1) => [0.0, 0.0, 0.0, 1.0],
        _ => [0.0; 4],
    }
}

/// A T²-invariant k-form: one [`ScalarField`] coefficient per basis element.
#[derive(Debug, Clone)]
pub struct KForm {
    degree: usize,
    spec: GridSpec,
    coeffs: Vec<ScalarField>,
}

impl KForm {
    pub fn zero(spec: GridSpec, degree: usize) -> Self {
        assert!(degree <= 4, "degree out of range");
        Self {
            degree,
            spec,
            coeffs: (0..BASIS_DIM[degree])
                .map(|_| ScalarField::zeros(spec))
                .collect(),
        }
    }

    /// A single basis element scaled by a field coefficient.
    pub fn from_basis(indices: &[u8], coeff: ScalarField) -> Self {
        let mut form = Self::zero(coeff.spec(), indices.len());
        form.coeffs[basis_position(indices)] = coeff;
        form
    }

    /// A single basis element with a constant coefficient.
    pub fn from_basis_const(spec: GridSpec, indices: &[u8], c: f64) -> Self {
        Self::from_basis(indices, ScalarField::constant(spec, c))
    }

    /// A 0-form wrapping a scalar field.
    pub fn from_function(f: ScalarField) -> Self {
        Self {
            degree: 0,
            spec: f.spec(),
            coeffs: vec![f],
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn coeffs(&self) -> &[ScalarField] {
        &self.coeffs
    }

    /// Coefficient of a basis element, by sorted index tuple.
    pub fn coeff(&self, indices: &[u8]) -> &ScalarField {
        assert_eq!(indices.len(), self.degree, "degree mismatch");
        &self.coeffs[basis_position(indices)]
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.degree, other.degree, "degree mismatch in add");
        Self {
            degree: self.degree,
            spec: self.spec,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            degree: self.degree,
            spec: self.spec,
            coeffs: self.coeffs.iter().map(|a| a.scale(c)).collect(),
        }
    }

    /// Multiply every coefficient by a scalar field.
    pub fn scale_field(&self, f: &ScalarField) -> Self {
        Self {
            degree: self.degree,
            spec: self.spec,
            coeffs: self.coeffs.iter().map(|a| a.mul(f)).collect(),
        }
    }

    /// max over basis coefficients of max |·|.
    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm_inf()))
    }
}

/// Exterior derivative: d(a_I e^I) = (∂ₓa_I e² + ∂_y a_I e¹) ∧ e^I + a_I d(e^I),
/// with d(e^I) expanded from de⁴ = e¹² and the graded Leibniz signs.
pub fn exterior_derivative(phi: &KForm) -> Result<KForm, FormsError> {
    if phi.degree() == 4 {
        return Err(FormsError::TopDegree);
    }
    let mut out = KForm::zero(phi.spec(), phi.degree() + 1);
    let bases = basis(phi.degree());
    for (pos, indices) in bases.iter().enumerate() {
        let a = &phi.coeffs[pos];
        // da ∧ e^I
        let ax = grid::partial_derivative(a, Axis::X)?;
        let ay = grid::partial_derivative(a, Axis::Y)?;
        for (d_idx, da) in [(2u8, ax), (1u8, ay)] {
            if let Some((sign, merged)) = wedge_indices(&[d_idx], indices) {
                let target = basis_position(&merged);
                out.coeffs[target] = out.coeffs[target].add(&da.scale(sign));
            }
        }
        // a · d(e^I): each factor e⁴ contributes (−1)^(j) e^{i₁…} ∧ e¹² ∧ e^{…iₖ}
        for (j, &idx) in indices.iter().enumerate() {
            if idx != 4 {
                continue;
            }
            let before = &indices[..j];
            let after = &indices[j + 1..];
            let leibniz = if j % 2 == 0 { 1.0 } else { -1.0 };
            if let Some((s1, head)) = wedge_indices(before, &[1, 2]) {
                if let Some((s2, merged)) = wedge_indices(&head, after) {
                    let target = basis_position(&merged);
                    out.coeffs[target] =
                        out.coeffs[target].add(&a.scale(leibniz * s1 * s2));
                }
            }
        }
    }
    Ok(out)
}

/// Graded-anticommutative wedge product.
pub fn wedge(alpha: &KForm, beta: &KForm) -> Result<KForm, FormsError> {
    let (ka, kb) = (alpha.degree(), beta.degree());
    if ka + kb > 4 {
        return Err(FormsError::DegreeOverflow(ka, kb));
    }
    let mut out = KForm::zero(alpha.spec(), ka + kb);
    for (pa, ia) in basis(ka).iter().enumerate() {
        for (pb, ib) in basis(kb).iter().enumerate() {
            if let Some((sign, merged)) = wedge_indices(ia, ib) {
                let target = basis_position(&merged);
                let term = alpha.coeffs[pa].mul(&beta.coeffs[pb]).scale(sign);
                out.coeffs[target] = out.coeffs[target].add(&term);
            }
        }
    }
    Ok(out)
}

/// J acting factorwise on basis elements, linear over the coefficients.
/// J∘J = (−1)^k in degree k.
pub fn apply_j(phi: &KForm) -> KForm {
    let k = phi.degree();
    let mut out = KForm::zero(phi.spec(), k);
    for (pos, indices) in basis(k).iter().enumerate() {
        let mut sign = 1.0;
        let mut image: Vec<u8> = Vec::with_capacity(k);
        for &i in indices.iter() {
            let (s, j) = j_index(i);
            sign *= s;
            image.push(j);
        }
        let (reorder_sign, sorted) = sort_with_sign(&image);
        let target = basis_position(&sorted);
        out.coeffs[target] = out.coeffs[target].add(&phi.coeffs[pos].scale(sign * reorder_sign));
    }
    out
}

fn sort_with_sign(indices: &[u8]) -> (f64, Vec<u8>) {
    let mut v = indices.to_vec();
    let mut sign = 1.0;
    let len = v.len();
    for i in 0..len {
        for j in 0..len.saturating_sub(1 + i) {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    (sign, v)
}

/// (1,1)-projection of a 2-form as the J-invariant average ½(β + Jβ).
pub fn project_one_one(beta: &KForm) -> Result<KForm, FormsError> {
    if beta.degree() != 2 {
        return Err(FormsError::WrongDegree {
            want: 2,
            got: beta.degree(),
        });
    }
    Ok(beta.add(&apply_j(beta)).scale(0.5))
}

/// dᶜ on functions: dᶜf = J(df), so that ddᶜf = (f_xx + f_yy) e¹² = Δf e¹².
pub fn dc_function(f: &ScalarField) -> Result<KForm, FormsError> {
    let df = exterior_derivative(&KForm::from_function(f.clone()))?;
    Ok(apply_j(&df))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn spec() -> GridSpec {
        GridSpec::new(16).unwrap()
    }

    /// Band-limited random field with modes up to `kmax` and amplitude `amp`.
    pub(crate) fn random_field(spec: GridSpec, rng: &mut StdRng, kmax: i32, amp: f64) -> ScalarField {
        let mut terms: Vec<(f64, f64, f64, f64)> = Vec::new();
        for kx in -kmax..=kmax {
            for ky in -kmax..=kmax {
                if kx == 0 && ky == 0 {
                    continue;
                }
                let w = amp / (1.0 + (kx * kx + ky * ky) as f64);
                terms.push((
                    kx as f64,
                    ky as f64,
                    rng.gen_range(-w..w),
                    rng.gen_range(0.0..2.0 * PI),
                ));
            }
        }
        let offset = rng.gen_range(-amp..amp);
        ScalarField::from_fn(spec, |x, y| {
            let mut v = offset;
            for &(kx, ky, a, phase) in &terms {
                v += a * (2.0 * PI * (kx * x + ky * y) + phase).cos();
            }
            v
        })
    }

    fn random_form(spec: GridSpec, rng: &mut StdRng, degree: usize) -> KForm {
        let mut form = KForm::zero(spec, degree);
        for indices in basis(degree) {
            form = form.add(&KForm::from_basis(indices, random_field(spec, rng, 3, 1.0)));
        }
        form
    }

    #[test]
    fn structure_equation_de4() {
        let s = spec();
        let e4 = KForm::from_basis_const(s, &[4], 1.0);
        let d = exterior_derivative(&e4).unwrap();
        let expected = KForm::from_basis_const(s, &[1, 2], 1.0);
        assert!(d.sub(&expected).norm_inf() == 0.0);
        for idx in [1u8, 2, 3] {
            let e = KForm::from_basis_const(s, &[idx], 1.0);
            assert_eq!(exterior_derivative(&e).unwrap().norm_inf(), 0.0);
        }
    }

    #[test]
    fn d_of_e34() {
        // d(e³∧e⁴) = −e³∧e¹² = −e¹²³
        let s = spec();
        let e34 = KForm::from_basis_const(s, &[3, 4], 1.0);
        let d = exterior_derivative(&e34).unwrap();
        let expected = KForm::from_basis_const(s, &[1, 2, 3], -1.0);
        assert_eq!(d.sub(&expected).norm_inf(), 0.0);
    }

    #[test]
    fn d_of_function() {
        let s = GridSpec::new(32).unwrap();
        let f = ScalarField::from_fn(s, |x, _| (2.0 * PI * x).cos());
        let d = exterior_derivative(&KForm::from_function(f)).unwrap();
        // df = f_x e² (no y dependence)
        let expected = KForm::from_basis(
            &[2],
            ScalarField::from_fn(s, |x, _| -2.0 * PI * (2.0 * PI * x).sin()),
        );
        assert!(d.sub(&expected).norm_inf() < 1e-11);
    }

    #[test]
    fn degree_four_rejected() {
        let s = spec();
        let top = KForm::from_basis_const(s, &[1, 2, 3, 4], 1.0);
        assert!(matches!(exterior_derivative(&top), Err(FormsError::TopDegree)));
    }

    #[test]
    fn wedge_single_reordering() {
        let s = spec();
        let theta = KForm::from_basis_const(s, &[3], -1.0);
        let omega = KForm::from_basis_const(s, &[1, 2], 1.0)
            .add(&KForm::from_basis_const(s, &[3, 4], 1.0));
        let w = wedge(&theta, &omega).unwrap();
        let expected = KForm::from_basis_const(s, &[1, 2, 3], -1.0);
        assert_eq!(w.sub(&expected).norm_inf(), 0.0);
    }

    #[test]
    fn wedge_self_annihilates() {
        let s = spec();
        let e1 = KForm::from_basis_const(s, &[1], 1.0);
        assert_eq!(wedge(&e1, &e1).unwrap().norm_inf(), 0.0);
    }

    #[test]
    fn wedge_degree_overflow_rejected() {
        let s = spec();
        let a = KForm::from_basis_const(s, &[1, 2, 3], 1.0);
        let b = KForm::from_basis_const(s, &[1, 2], 1.0);
        assert!(matches!(
            wedge(&a, &b),
            Err(FormsError::DegreeOverflow(3, 2))
        ));
    }

    #[test]
    fn wedge_graded_anticommutative() {
        let mut rng = StdRng::seed_from_u64(7);
        let s = spec();
        for (ka, kb) in [(1usize, 1usize), (1, 2), (2, 2), (1, 3)] {
            let a = random_form(s, &mut rng, ka);
            let b = random_form(s, &mut rng, kb);
            let ab = wedge(&a, &b).unwrap();
            let ba = wedge(&b, &a).unwrap();
            let sign = if (ka * kb) % 2 == 0 { 1.0 } else { -1.0 };
            let resid = ab.sub(&ba.scale(sign)).norm_inf();
            assert!(resid <= 1e-12 * (1.0 + ab.norm_inf()), "({ka},{kb}): {resid}");
        }
    }

    #[test]
    fn theta_wedge_omega_matches_proof_display() {
        // θ∧ω = (sh₁+u₁h₄−h₃u₂)e¹³⁴ + (u₁h₁−u₂h₂+rh₄)e¹²⁴
        //     + (−u₂h₁−u₁h₂+rh₃)e¹²³ + (sh₂−u₁h₃−u₂h₄)e²³⁴
        let mut rng = StdRng::seed_from_u64(11);
        let s = spec();
        let [r, sf, u1, u2, h1, h2, h3, h4] =
            std::array::from_fn(|_| random_field(s, &mut rng, 2, 0.5));
        let theta = KForm::from_basis(&[1], h1.clone())
            .add(&KForm::from_basis(&[2], h2.clone()))
            .add(&KForm::from_basis(&[3], h3.clone()))
            .add(&KForm::from_basis(&[4], h4.clone()));
        let omega = KForm::from_basis(&[1, 2], r.clone())
            .add(&KForm::from_basis(&[3, 4], sf.clone()))
            .add(&KForm::from_basis(&[1, 3], u1.clone()))
            .add(&KForm::from_basis(&[2, 4], u1.clone()))
            .add(&KForm::from_basis(&[1, 4], u2.clone()))
            .add(&KForm::from_basis(&[2, 3], u2.neg()));
        let w = wedge(&theta, &omega).unwrap();

        let e134 = sf.mul(&h1).add(&u1.mul(&h4)).sub(&h3.mul(&u2));
        let e124 = u1.mul(&h1).sub(&u2.mul(&h2)).add(&r.mul(&h4));
        let e123 = u2.mul(&h1).neg().sub(&u1.mul(&h2)).add(&r.mul(&h3));
        let e234 = sf.mul(&h2).sub(&u1.mul(&h3)).sub(&u2.mul(&h4));
        for (indices, expected) in [
            (&[1u8, 3, 4][..], e134),
            (&[1, 2, 4][..], e124),
            (&[1, 2, 3][..], e123),
            (&[2, 3, 4][..], e234),
        ] {
            let resid = w.coeff(indices).sub(&expected).norm_inf();
            assert!(resid <= 1e-12, "coefficient {indices:?}: {resid}");
        }
    }

    #[test]
    fn j_on_one_forms_matches_table() {
        let s = spec();
        let cases: [(&[u8], &[u8], f64); 4] = [
            (&[1], &[2], 1.0),
            (&[2], &[1], -1.0),
            (&[3], &[4], 1.0),
            (&[4], &[3], -1.0),
        ];
        for (src, dst, sign) in cases {
            let j = apply_j(&KForm::from_basis_const(s, src, 1.0));
            let expected = KForm::from_basis_const(s, dst, sign);
            assert_eq!(j.sub(&expected).norm_inf(), 0.0);
        }
        // −e³ ↦ −e⁴
        let j = apply_j(&KForm::from_basis_const(s, &[3], -1.0));
        assert_eq!(
            j.sub(&KForm::from_basis_const(s, &[4], -1.0)).norm_inf(),
            0.0
        );
    }

    #[test]
    fn j_on_two_forms() {
        let s = spec();
        // Je¹³ = e²∧e⁴ = e²⁴
        let j = apply_j(&KForm::from_basis_const(s, &[1, 3], 1.0));
        assert_eq!(
            j.sub(&KForm::from_basis_const(s, &[2, 4], 1.0)).norm_inf(),
            0.0
        );
    }

    #[test]
    fn j_squared_is_minus_one_per_degree() {
        let mut rng = StdRng::seed_from_u64(3);
        let s = spec();
        for k in 1..=3usize {
            let phi = random_form(s, &mut rng, k);
            let jj = apply_j(&apply_j(&phi));
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(jj.sub(&phi.scale(sign)).norm_inf(), 0.0, "degree {k}");
        }
    }

    #[test]
    fn one_one_projection_on_basis() {
        let s = spec();
        let half = 0.5;
        // frozen J-averages of the six 2-form basis elements
        let cases: [(&[u8], Vec<(&[u8], f64)>); 6] = [
            (&[1, 2], vec![(&[1, 2], 1.0)]),
            (&[3, 4], vec![(&[3, 4], 1.0)]),
            (&[1, 3], vec![(&[1, 3], half), (&[2, 4], half)]),
            (&[2, 4], vec![(&[1, 3], half), (&[2, 4], half)]),
            (&[1, 4], vec![(&[1, 4], half), (&[2, 3], -half)]),
            (&[2, 3], vec![(&[2, 3], half), (&[1, 4], -half)]),
        ];
        for (src, expect) in cases {
            let p = project_one_one(&KForm::from_basis_const(s, src, 1.0)).unwrap();
            let mut e = KForm::zero(s, 2);
            for (idx, c) in expect {
                e = e.add(&KForm::from_basis_const(s, idx, c));
            }
            assert_eq!(p.sub(&e).norm_inf(), 0.0, "projection of {src:?}");
        }
    }

    #[test]
    fn one_one_projection_matches_complex_frame_conversion() {
        // Independent oracle: expand each real basis 2-form over the complex
        // frame φ¹ = e¹ + ie², φ² = e³ + ie⁴, drop the (2,0)+(0,2) part
        // (φ¹², φ¹̄²̄), and convert back. Complex wedge done in test code.
        type C = (f64, f64);
        fn cmul(a: C, b: C) -> C {
            (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
        }
        // φ-frame 1-forms as complex combinations of e¹..e⁴
        let phi: [[C; 4]; 4] = [
            [(1.0, 0.0), (0.0, 1.0), (0.0, 0.0), (0.0, 0.0)],  // φ¹
            [(1.0, 0.0), (0.0, -1.0), (0.0, 0.0), (0.0, 0.0)], // φ¹̄
            [(0.0, 0.0), (0.0, 0.0), (1.0, 0.0), (0.0, 1.0)],  // φ²
            [(0.0, 0.0), (0.0, 0.0), (1.0, 0.0), (0.0, -1.0)], // φ²̄
        ];
        // real 2-form basis as pairs (i, j)
        let pairs: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        // complex-frame 2-form products φ^a ∧ φ^b expanded on the real basis
        let wedge_c = |a: usize, b: usize| -> [C; 6] {
            let mut out = [(0.0, 0.0); 6];
            for (p, &(i, j)) in pairs.iter().enumerate() {
                // coefficient of e^{i+1, j+1} in φ^a∧φ^b
                let c = {
                    let t1 = cmul(phi[a][i], phi[b][j]);
                    let t2 = cmul(phi[a][j], phi[b][i]);
                    (t1.0 - t2.0, t1.1 - t2.1)
                };
                out[p] = c;
            }
            out
        };
        // invert: express each real basis element over the six φ-pairs
        // (φ¹φ¹̄, φ¹φ², φ¹φ²̄, φ¹̄φ², φ¹̄φ²̄, φ²φ²̄); (1,1) span is
        // {φ¹φ¹̄, φ¹φ²̄, φ¹̄φ², φ²φ²̄}.
        let products: [(usize, usize, bool); 6] = [
            (0, 1, true),
            (0, 2, false),
            (0, 3, true),
            (1, 2, true),
            (1, 3, false),
            (2, 3, true),
        ];
        let cols: Vec<[C; 6]> = products.iter().map(|&(a, b, _)| wedge_c(a, b)).collect();
        // solve the 6×6 complex linear system column-by-column for each real
        // basis element by Gaussian elimination over (re, im) pairs
        let solve = |rhs_index: usize| -> [C; 6] {
            let nn = 6;
            let mut m = vec![vec![(0.0, 0.0); nn + 1]; nn];
            for row in 0..nn {
                for (col, column) in cols.iter().enumerate() {
                    m[row][col] = column[row];
                }
                m[row][nn] = if row == rhs_index { (1.0, 0.0) } else { (0.0, 0.0) };
            }
            for piv in 0..nn {
                let pr = (piv..nn)
                    .max_by(|&a, &b| {
                        let na = m[a][piv].0.hypot(m[a][piv].1);
                        let nb = m[b][piv].0.hypot(m[b][piv].1);
                        na.partial_cmp(&nb).unwrap()
                    })
                    .unwrap();
                m.swap(piv, pr);
                let d = m[piv][piv];
                let dn = d.0 * d.0 + d.1 * d.1;
                for col in piv..=nn {
                    let v = m[piv][col];
                    m[piv][col] = ((v.0 * d.0 + v.1 * d.1) / dn, (v.1 * d.0 - v.0 * d.1) / dn);
                }
                for row in 0..nn {
                    if row == piv {
                        continue;
                    }
                    let factor = m[row][piv];
                    for col in piv..=nn {
                        let sub = cmul(factor, m[piv][col]);
                        m[row][col] = (m[row][col].0 - sub.0, m[row][col].1 - sub.1);
                    }
                }
            }
            std::array::from_fn(|row| m[row][nn])
        };
        let s = spec();
        for (real_idx, indices) in basis(2).iter().enumerate() {
            let coords = solve(real_idx);
            // keep only (1,1) products, convert back to the real basis
            let mut projected = [(0.0, 0.0); 6];
            for (pi, &(_, _, keep)) in products.iter().enumerate() {
                if !keep {
                    continue;
                }
                let comp = wedge_c(products[pi].0, products[pi].1);
                for col in 0..6 {
                    let term = cmul(coords[pi], comp[col]);
                    projected[col].0 += term.0;
                    projected[col].1 += term.1;
                }
            }
            // the projection of a real form is real
            let mut expected = KForm::zero(s, 2);
            for (col, &(re, im)) in projected.iter().enumerate() {
                assert!(im.abs() < 1e-12, "imaginary residue on {indices:?}");
                expected = expected.add(&KForm::from_basis_const(s, basis(2)[col], re));
            }
            let actual = project_one_one(&KForm::from_basis_const(s, indices, 1.0)).unwrap();
            let resid = actual.sub(&expected).norm_inf();
            assert!(resid < 1e-12, "complex-frame mismatch on {indices:?}: {resid}");
        }
    }

    #[test]
    fn projection_idempotent() {
        let mut rng = StdRng::seed_from_u64(5);
        let s = spec();
        let beta = random_form(s, &mut rng, 2);
        let once = project_one_one(&beta).unwrap();
        let twice = project_one_one(&once).unwrap();
        assert_eq!(twice.sub(&once).norm_inf(), 0.0);
        assert_eq!(apply_j(&once).sub(&once).norm_inf(), 0.0);
    }

    #[test]
    fn dc_of_cosine() {
        let s = GridSpec::new(32).unwrap();
        let f = ScalarField::from_fn(s, |x, _| (2.0 * PI * x).cos());
        let dc = dc_function(&f).unwrap();
        let expected = KForm::from_basis(
            &[1],
            ScalarField::from_fn(s, |x, _| 2.0 * PI * (2.0 * PI * x).sin()),
        );
        assert!(dc.sub(&expected).norm_inf() < 1e-11);
        // d(dᶜf) = Δf e¹²
        let ddc = exterior_derivative(&dc).unwrap();
        let lap = grid::laplacian(&f).unwrap();
        assert!(ddc.coeff(&[1, 2]).sub(&lap).norm_inf() < 1e-10);
        assert_eq!(dc_function(&ScalarField::constant(s, 2.0)).unwrap().norm_inf(), 0.0);
    }

    #[test]
    fn ddc_equals_laplacian_two_mode() {
        let s = GridSpec::new(32).unwrap();
        let f = ScalarField::from_fn(s, |x, y| {
            0.005 * ((2.0 * PI * x).cos() + (2.0 * PI * y).cos())
        });
        let ddc = exterior_derivative(&dc_function(&f).unwrap()).unwrap();
        let lap = grid::laplacian(&f).unwrap();
        assert!(ddc.coeff(&[1, 2]).sub(&lap).norm_inf() < 1e-12);
        for indices in basis(2).iter().skip(1) {
            assert!(ddc.coeff(indices).norm_inf() < 1e-12);
        }
    }

    #[test]
    fn d_squared_vanishes_on_random_forms() {
        let mut rng = StdRng::seed_from_u64(42);
        let s = spec();
        for _ in 0..60 {
            let degree = rng.gen_range(0..=2);
            let phi = random_form(s, &mut rng, degree);
            let dd = exterior_derivative(&exterior_derivative(&phi).unwrap()).unwrap();
            let bound = 1e-10 * (1.0 + phi.norm_inf());
            assert!(dd.norm_inf() <= bound, "degree {degree}: {}", dd.norm_inf());
        }
    }

    #[test]
    fn leibniz_rule() {
        let mut rng = StdRng::seed_from_u64(9);
        let s = spec();
        for (ka, kb) in [(0usize, 1usize), (1, 1), (1, 2), (0, 2)] {
            let a = random_form(s, &mut rng, ka);
            let b = random_form(s, &mut rng, kb);
            let lhs = exterior_derivative(&wedge(&a, &b).unwrap()).unwrap();
            let sign = if ka % 2 == 0 { 1.0 } else { -1.0 };
            let rhs = wedge(&exterior_derivative(&a).unwrap(), &b)
                .unwrap()
                .add(&wedge(&a, &exterior_derivative(&b).unwrap()).unwrap().scale(sign));
            let resid = lhs.sub(&rhs).norm_inf();
            assert!(resid <= 1e-10 * (1.0 + lhs.norm_inf()), "({ka},{kb}): {resid}");
        }
    }
}
