//! Maximally entangled states of a pair of identical `N`-level systems and
//! the partner observables they induce.
//!
//! A state is stored as `(1/√N) Σ ψ_n ⊗ φ_n`, with the `ψ` factor (system 2)
//! as the left, slow tensor index and the `φ` factor (system 1) on the right.
//! The pairing `φ_n ↦ ψ_n` is kept as an anti-linear map defined by its two
//! bases, so conjugation of coefficients is structural.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{tensor_state, Basis, Operator, StateVector, C64, SOLVER_TOL};

/// `U(Σ c_n φ_n) = Σ conj(c_n) ψ_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct AntiLinearMap {
    domain: Basis,
    image: Basis,
}

impl AntiLinearMap {
    pub fn new(domain: Basis, image: Basis) -> Result<Self> {
        if domain.dim() != image.dim() {
            return Err(Error::DimMismatch { left: domain.dim(), right: image.dim() });
        }
        Ok(Self { domain, image })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain_basis(&self) -> &Basis {
        &self.domain
    }

    pub fn image_basis(&self) -> &Basis {
        &self.image
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        let c: Vec<C64> = self.domain.coefficients(v).iter().map(|c| c.conj()).collect();
        self.image.combine(&c)
    }

    /// `U⁻¹(Σ d_n ψ_n) = Σ conj(d_n) φ_n`.
    pub fn apply_inverse(&self, v: &StateVector) -> StateVector {
        let d: Vec<C64> = self.image.coefficients(v).iter().map(|c| c.conj()).collect();
        self.domain.combine(&d)
    }

    /// `U_a ⊗ U_b`, acting on product bases.
    pub fn tensor(&self, other: &Self) -> Self {
        Self { domain: product_basis(&self.domain, &other.domain), image: product_basis(&self.image, &other.image) }
    }
}

fn product_basis(a: &Basis, b: &Basis) -> Basis {
    let vectors = a
        .vectors()
        .iter()
        .flat_map(|u| b.vectors().iter().map(move |v| tensor_state(u, v)))
        .collect();
    Basis::with_tolerance(vectors, SOLVER_TOL).expect("product of orthonormal bases is orthonormal")
}

#[derive(Clone, Debug)]
pub struct MaximallyEntangledState {
    u: AntiLinearMap,
    psi: StateVector,
}

impl MaximallyEntangledState {
    pub fn n(&self) -> usize {
        self.u.dim()
    }

    pub fn u(&self) -> &AntiLinearMap {
        &self.u
    }

    pub fn psi(&self) -> &StateVector {
        &self.psi
    }

    /// Schmidt coefficients across the system 2 | system 1 cut, descending.
    pub fn schmidt_coefficients(&self) -> Vec<f64> {
        schmidt_coefficients(&self.psi, self.n(), self.n()).expect("state has dimension N²")
    }

    /// `O` on system 1: `𝟙 ⊗ O`.
    pub fn system1_operator(&self, o: &Operator) -> Result<Operator> {
        crate::hilbert::tensor_op(&Operator::identity(self.n()), o)
    }

    /// `Õ` on system 2: `Õ ⊗ 𝟙`.
    pub fn system2_operator(&self, o_tilde: &Operator) -> Result<Operator> {
        crate::hilbert::tensor_op(o_tilde, &Operator::identity(self.n()))
    }
}

/// The state `(1/√N) Σ ψ_n ⊗ φ_n` together with the map `U φ_n = ψ_n`.
pub fn build_from_bases(phi: &Basis, psi: &Basis) -> Result<MaximallyEntangledState> {
    let u = AntiLinearMap::new(phi.clone(), psi.clone())?;
    let vector = pair_sum(psi.vectors(), phi.vectors());
    Ok(MaximallyEntangledState { u, psi: vector })
}

// (1/√N) Σ left_n ⊗ right_n
fn pair_sum(left: &[StateVector], right: &[StateVector]) -> StateVector {
    let n = left.len();
    let scale = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    let mut acc = StateVector::zeros(n * n);
    for (l, r) in left.iter().zip(right) {
        acc = acc.add(&tensor_state(l, r)).expect("equal dims");
    }
    acc.scale(scale)
}

/// `(1/√N) Σ Uχ_n ⊗ χ_n`, which reproduces the stored state for every
/// orthonormal basis `χ`.
pub fn represent_in_basis(state: &MaximallyEntangledState, chi: &Basis) -> Result<StateVector> {
    if chi.dim() != state.n() {
        return Err(Error::DimMismatch { left: state.n(), right: chi.dim() });
    }
    let images: Vec<StateVector> = chi.vectors().iter().map(|v| state.u.apply(v)).collect();
    Ok(pair_sum(&images, chi.vectors()))
}

fn check_partner_input(state: &MaximallyEntangledState, o: &Operator) -> Result<()> {
    if o.dim() != state.n() {
        return Err(Error::DimMismatch { left: state.n(), right: o.dim() });
    }
    o.require_self_adjoint(SOLVER_TOL)
}

/// `Õ = U O U⁻¹`, evaluated column by column on the standard basis.
pub fn partner_operator(state: &MaximallyEntangledState, o: &Operator) -> Result<Operator> {
    check_partner_input(state, o)?;
    let n = state.n();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let pre = state.u.apply_inverse(&StateVector::basis(n, j));
        let col = state.u.apply(&o.apply(&pre)?);
        for (i, a) in col.amplitudes().iter().enumerate() {
            m[(i, j)] = *a;
        }
    }
    Operator::dense(m)
}

/// Second route to the partner: the matrix of `Õ` in the `ψ` basis is the
/// entrywise conjugate of the matrix of `O` in the `φ` basis.
pub fn partner_operator_via_coefficients(state: &MaximallyEntangledState, o: &Operator) -> Result<Operator> {
    check_partner_input(state, o)?;
    let phi = state.u.domain_basis().matrix();
    let psi = state.u.image_basis().matrix();
    let in_phi = phi.adjoint() * o.to_dense()? * &phi;
    let conj = in_phi.map(|a| a.conj());
    Operator::dense(&psi * conj * psi.adjoint())
}

/// `‖(Õ ⊗ 𝟙 − 𝟙 ⊗ O) Ψ‖`: zero exactly when measuring `Õ` on system 2 and
/// `O` on system 1 always agree.
pub fn correlation_residual(state: &MaximallyEntangledState, o: &Operator, o_tilde: &Operator) -> Result<f64> {
    let n = state.n();
    for dim in [o.dim(), o_tilde.dim()] {
        if dim != n {
            return Err(Error::DimMismatch { left: n, right: dim });
        }
    }
    // Ψ as an N×N matrix M (row: system 2, column: system 1);
    // (Õ⊗𝟙)Ψ ↔ Õ M and (𝟙⊗O)Ψ ↔ M Oᵀ.
    let m = DMatrix::from_row_slice(n, n, state.psi.amplitudes());
    let diff = o_tilde.to_dense()? * &m - &m * o.to_dense()?.transpose();
    Ok(diff.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt())
}

/// Singular values of the `dim_left × dim_right` coefficient matrix of `v`,
/// in descending order.
pub fn schmidt_coefficients(v: &StateVector, dim_left: usize, dim_right: usize) -> Result<Vec<f64>> {
    if v.dim() != dim_left * dim_right {
        return Err(Error::DimMismatch { left: v.dim(), right: dim_left * dim_right });
    }
    let m = DMatrix::from_row_slice(dim_left, dim_right, v.amplitudes());
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Reorders a vector on `(A₂ ⊗ A₁) ⊗ (B₂ ⊗ B₁)` into `(A₂ ⊗ B₂) ⊗ (A₁ ⊗ B₁)`,
/// grouping both system-2 factors on the left.
pub fn reorder_product(v: &StateVector, na: usize, nb: usize) -> Result<StateVector> {
    let dim = na * na * nb * nb;
    if v.dim() != dim {
        return Err(Error::DimMismatch { left: v.dim(), right: dim });
    }
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for a2 in 0..na {
        for a1 in 0..na {
            for b2 in 0..nb {
                for b1 in 0..nb {
                    let src = ((a2 * na + a1) * nb + b2) * nb + b1;
                    let dst = (a2 * nb + b2) * (na * nb) + (a1 * nb + b1);
                    out[dst] = v.amplitudes()[src];
                }
            }
        }
    }
    StateVector::new(out)
}

/// Product of two maximally entangled states, regrouped so that system 1 is
/// `A₁ ⊗ B₁` and system 2 is `A₂ ⊗ B₂`. The map of the product is `U_a ⊗ U_b`.
pub fn product_state(a: &MaximallyEntangledState, b: &MaximallyEntangledState) -> MaximallyEntangledState {
    let u = a.u.tensor(&b.u);
    let psi = pair_sum(u.image_basis().vectors(), u.domain_basis().vectors());
    MaximallyEntangledState { u, psi }
}

/// The spin singlet `(|↑↓⟩ − |↓↑⟩)/√2`, from `φ = (↑, ↓)` and `ψ = (−↓, ↑)`.
pub fn singlet() -> MaximallyEntangledState {
    let up = StateVector::from_real(&[1.0, 0.0]).expect("2-vector");
    let down = StateVector::from_real(&[0.0, 1.0]).expect("2-vector");
    let phi = Basis::new(vec![up.clone(), down.clone()]).expect("standard basis");
    let psi = Basis::new(vec![down.scale(C64::new(-1.0, 0.0)), up]).expect("orthonormal");
    build_from_bases(&phi, &psi).expect("equal dims")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{eigendecompose, random_hermitian, random_state, tensor_op};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_mes(n: usize, rng: &mut ChaCha8Rng) -> MaximallyEntangledState {
        build_from_bases(&Basis::random(n, rng), &Basis::random(n, rng)).unwrap()
    }

    #[test]
    fn one_dimensional_state() {
        let b = Basis::standard(1);
        let s = build_from_bases(&b, &b).unwrap();
        assert_eq!(s.psi().amplitudes(), &[C64::new(1.0, 0.0)]);
        let v = StateVector::new(vec![C64::new(0.3, 0.4)]).unwrap();
        assert_eq!(s.u().apply(&v).amplitudes(), &[C64::new(0.3, -0.4)]);
    }

    #[test]
    fn singlet_vector() {
        let s = singlet();
        let r = 1.0 / 2f64.sqrt();
        let expected = StateVector::from_real(&[0.0, r, -r, 0.0]).unwrap();
        assert!(s.psi().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn build_rejects_mismatched_dims() {
        let err = build_from_bases(&Basis::standard(2), &Basis::standard(3)).unwrap_err();
        assert_eq!(err, Error::DimMismatch { left: 2, right: 3 });
    }

    #[test]
    fn random_states_have_flat_schmidt_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_mes(3, &mut rng);
        for c in s.schmidt_coefficients() {
            assert!((c - 1.0 / 3f64.sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn representation_in_domain_and_x_bases() {
        let s = singlet();
        let same = represent_in_basis(&s, s.u().domain_basis()).unwrap();
        assert_eq!(same, *s.psi());
        let r = 1.0 / 2f64.sqrt();
        let x_basis = Basis::new(vec![
            StateVector::from_real(&[r, r]).unwrap(),
            StateVector::from_real(&[r, -r]).unwrap(),
        ])
        .unwrap();
        assert!(represent_in_basis(&s, &x_basis).unwrap().max_abs_diff(s.psi()) < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s4 = random_mes(4, &mut rng);
        let chi = Basis::random(4, &mut rng);
        assert!(represent_in_basis(&s4, &chi).unwrap().max_abs_diff(s4.psi()) < 1e-12);
    }

    #[test]
    fn singlet_partner_is_minus_o() {
        let s = singlet();
        let o = Operator::pauli_z();
        let partner = partner_operator(&s, &o).unwrap();
        let minus_o = o.scale(C64::new(-1.0, 0.0));
        assert!(partner.max_abs_diff(&minus_o).unwrap() < 1e-12);
        let id = partner_operator(&s, &Operator::identity(2)).unwrap();
        assert!(id.max_abs_diff(&Operator::identity(2)).unwrap() < 1e-12);
    }

    #[test]
    fn partner_preserves_spectrum_and_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let s = random_mes(3, &mut rng);
        let o = random_hermitian(3, &mut rng);
        let partner = partner_operator(&s, &o).unwrap();
        let other = partner_operator_via_coefficients(&s, &o).unwrap();
        assert!(partner.max_abs_diff(&other).unwrap() < 1e-12);
        assert!(partner.is_self_adjoint(1e-12));
        let a = eigendecompose(&o).unwrap().eigenvalues;
        let b = eigendecompose(&partner).unwrap().eigenvalues;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn partner_rejects_non_hermitian() {
        let o = Operator::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(partner_operator(&singlet(), &o), Err(Error::NotSelfAdjoint { .. })));
    }

    #[test]
    fn singlet_correlation_residuals() {
        let s = singlet();
        let o = Operator::pauli_z();
        let minus_o = o.scale(C64::new(-1.0, 0.0));
        assert!(correlation_residual(&s, &o, &minus_o).unwrap() < 1e-12);
        let id = Operator::identity(2);
        assert_eq!(correlation_residual(&s, &id, &id).unwrap(), 0.0);
        // Σ over |↑↓⟩,|↓↑⟩ of (±2/√2)² = 4
        let wrong = correlation_residual(&s, &o, &o).unwrap();
        assert!((wrong - 2.0).abs() < 1e-12, "residual {wrong}");
    }

    #[test]
    fn correlation_residual_matches_dense_kronecker() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let s = random_mes(3, &mut rng);
        let o = random_hermitian(3, &mut rng);
        let t = random_hermitian(3, &mut rng);
        let lhs = s.system2_operator(&t).unwrap().apply(s.psi()).unwrap();
        let rhs = s.system1_operator(&o).unwrap().apply(s.psi()).unwrap();
        let dense = lhs.sub(&rhs).unwrap().norm();
        assert!((correlation_residual(&s, &o, &t).unwrap() - dense).abs() < 1e-12);
    }

    #[test]
    fn reorder_matches_index_arithmetic() {
        // label every amplitude by its source index and follow one entry
        let (na, nb) = (2, 3);
        let v = StateVector::new((0..36).map(|i| C64::new(i as f64, 0.0)).collect()).unwrap();
        let out = reorder_product(&v, na, nb).unwrap();
        // (a2, a1, b2, b1) = (1, 0, 2, 1): src = ((1*2+0)*3+2)*3+1 = 25
        // dst = (a2*nb + b2)*(na*nb) + a1*nb + b1 = 5*6 + 1 = 31
        assert_eq!(out.amplitudes()[31].re, 25.0);
    }

    #[test]
    fn product_of_singlets() {
        let s = singlet();
        let p = product_state(&s, &s);
        assert_eq!(p.n(), 4);
        for c in p.schmidt_coefficients() {
            assert!((c - 0.5).abs() < 1e-10);
        }
        let direct = reorder_product(&tensor_state(s.psi(), s.psi()), 2, 2).unwrap();
        assert!(direct.max_abs_diff(p.psi()) < 1e-12);
    }

    #[test]
    fn product_with_trivial_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let trivial = build_from_bases(&Basis::standard(1), &Basis::standard(1)).unwrap();
        let s = random_mes(3, &mut rng);
        let p = product_state(&trivial, &s);
        assert!(p.psi().max_abs_diff(s.psi()) < 1e-12);
    }

    #[test]
    fn partner_of_product_is_product_of_partners() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let a = random_mes(2, &mut rng);
        let b = random_mes(3, &mut rng);
        let p = product_state(&a, &b);
        let o1 = random_hermitian(2, &mut rng);
        let o2 = random_hermitian(3, &mut rng);
        let lhs = partner_operator(&p, &tensor_op(&o1, &o2).unwrap()).unwrap();
        let rhs = tensor_op(&partner_operator(&a, &o1).unwrap(), &partner_operator(&b, &o2).unwrap()).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn u_is_anti_linear(seed in any::<u64>(), n in 1usize..6, ar in -2.0..2.0f64, ai in -2.0..2.0f64,
                            br in -2.0..2.0f64, bi in -2.0..2.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_mes(n, &mut rng);
            let (u, v) = (random_state(n, &mut rng), random_state(n, &mut rng));
            let (alpha, beta) = (C64::new(ar, ai), C64::new(br, bi));
            let lhs = s.u().apply(&u.scale(alpha).add(&v.scale(beta)).unwrap());
            let rhs = s.u().apply(&u).scale(alpha.conj()).add(&s.u().apply(&v).scale(beta.conj())).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().norm() < 1e-12);
            for k in 0..n {
                prop_assert!(s.u().apply(s.u().domain_basis().vector(k)).max_abs_diff(s.u().image_basis().vector(k)) < 1e-12);
            }
            prop_assert!(s.u().apply_inverse(&s.u().apply(&u)).max_abs_diff(&u) < 1e-12);
        }

        #[test]
        fn partner_is_perfectly_correlated(seed in any::<u64>(), n in prop::sample::select(vec![2usize, 3, 5])) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_mes(n, &mut rng);
            let o = random_hermitian(n, &mut rng);
            let partner = partner_operator(&s, &o).unwrap();
            prop_assert!(correlation_residual(&s, &o, &partner).unwrap() < 1e-10);
            prop_assert!(represent_in_basis(&s, &Basis::random(n, &mut rng)).unwrap().max_abs_diff(s.psi()) < 1e-12);
        }
    }
}
