//! No-go witnesses: the Pauli counterexample, the oscillator energy
//! mismatch, the eigenvalue constraint, and the cosine (Clifton) set on an
//! even lattice where `b·c = π` holds exactly.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{anticommutator, commutator, eigendecompose, Operator, C64, EXACT_TOL, SOLVER_TOL};
use crate::lattice::{momentum_op, position_op, LatticeConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VonNeumannReport {
    /// Spectrum of `σx/√2` (and of `σy/√2`).
    pub single_values: Vec<f64>,
    /// Every attainable `v(O) + v(O′)`, ascending and deduplicated.
    pub attained_sums: Vec<f64>,
    /// Spectrum of `(σx + σy)/√2`.
    pub sum_eigenvalues: Vec<f64>,
    pub intersection: Vec<f64>,
    pub contradiction: bool,
}

/// `O = σx/√2`, `O′ = σy/√2`: any additive value map sends `O + O′` to one of
/// `{−√2, 0, √2}`, none of which is an eigenvalue of `O + O′`.
pub fn von_neumann_demo() -> Result<VonNeumannReport> {
    let scale = C64::new(FRAC_1_SQRT_2, 0.0);
    let o = Operator::pauli_x().scale(scale);
    let o_prime = Operator::pauli_y().scale(scale);
    let single_values = eigendecompose(&o)?.eigenvalues;
    let prime_values = eigendecompose(&o_prime)?.eigenvalues;
    let sum_eigenvalues = eigendecompose(&o.add(&o_prime)?)?.eigenvalues;

    let mut attained_sums: Vec<f64> = Vec::new();
    for a in &single_values {
        for b in &prime_values {
            let s = snap(a + b);
            if !attained_sums.iter().any(|t| (t - s).abs() < EXACT_TOL) {
                attained_sums.push(s);
            }
        }
    }
    attained_sums.sort_by(f64::total_cmp);
    let intersection: Vec<f64> = attained_sums
        .iter()
        .copied()
        .filter(|s| sum_eigenvalues.iter().any(|e| (e - s).abs() < EXACT_TOL))
        .collect();
    Ok(VonNeumannReport {
        single_values,
        attained_sums,
        sum_eigenvalues,
        contradiction: intersection.is_empty(),
        intersection,
    })
}

// Snaps values within rounding of {0, ±√2} onto them.
fn snap(x: f64) -> f64 {
    for target in [0.0, SQRT_2, -SQRT_2] {
        if (x - target).abs() < 1e-14 {
            return target;
        }
    }
    x
}

/// Whether `½(vp² + ω² vx²)` equals some `ω(n + ½)` with `n ≤ n_max`.
pub fn oscillator_compatibility(vp: f64, vx: f64, omega: f64, n_max: u32) -> Result<bool> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
    }
    let energy = 0.5 * (vp * vp + omega * omega * vx * vx);
    Ok((0..=n_max).any(|n| (energy - omega * (n as f64 + 0.5)).abs() < 1e-9))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OscillatorSweep {
    pub vp: f64,
    pub vx: f64,
    pub omegas: usize,
    pub compatible: Vec<f64>,
    pub incompatible: usize,
}

/// Runs [`oscillator_compatibility`] over `count` evenly spaced ω in
/// `[lo, hi]`.
pub fn oscillator_sweep(vp: f64, vx: f64, lo: f64, hi: f64, count: usize, n_max: u32) -> Result<OscillatorSweep> {
    if count < 2 || !(lo > 0.0) || hi <= lo {
        return Err(Error::InvalidParameter(format!("sweep [{lo}, {hi}] with {count} points")));
    }
    let mut compatible = Vec::new();
    for i in 0..count {
        let omega = lo + (hi - lo) * i as f64 / (count - 1) as f64;
        if oscillator_compatibility(vp, vx, omega, n_max)? {
            compatible.push(omega);
        }
    }
    Ok(OscillatorSweep { vp, vx, omegas: count, incompatible: count - compatible.len(), compatible })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenvalueConstraintReport {
    pub spectrum: Vec<f64>,
    /// Operator-norm distance between `f(O)` and `O`, where `f` is the
    /// identity on the spectrum.
    pub residual: f64,
}

/// Builds `f` equal to the identity on the spectrum of `o` and checks
/// `f(O) = O` by spectral calculus.
pub fn eigenvalue_constraint_demo(o: &Operator) -> Result<EigenvalueConstraintReport> {
    let spectrum: Vec<f64> = o.spectral_resolution()?.iter().map(|e| e.eigenvalue).collect();
    let table = spectrum.clone();
    let f = move |x: f64| {
        table
            .iter()
            .copied()
            .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))
            .expect("nonempty spectrum")
    };
    let fo = o.apply_function(f)?;
    Ok(EigenvalueConstraintReport { residual: fo.sub(o)?.densified()?.operator_norm()?, spectrum })
}

/// The four cosine operators on a two-particle even lattice and their two
/// products `C` and `D`.
#[derive(Clone, Debug)]
pub struct CliftonSet {
    pub config: LatticeConfig,
    pub k0: i64,
    pub m: i64,
    pub clifton_a: f64,
    pub a1: Operator,
    pub a2: Operator,
    pub b1: Operator,
    pub b2: Operator,
    pub c: Operator,
    pub d: Operator,
}

impl CliftonSet {
    pub fn n_points(&self) -> usize {
        self.config.n_points()
    }

    /// `π / a`, which is the lattice shift `m·h`.
    pub fn shift(&self) -> f64 {
        PI / self.clifton_a
    }
}

/// `A_i = cos(a Q_i)`, `B_i = cos(π P_i / a)` with `a = 2π k0 / (n_points h)`,
/// `C = (A₁A₂)(B₂B₁)`, `D = (A₁B₂)(A₂B₁)`.
pub fn build_clifton_set(n_points: usize, k0: i64, m: i64) -> Result<CliftonSet> {
    build_clifton_set_with_spacing(n_points, k0, m, 1.0)
}

pub fn build_clifton_set_with_spacing(n_points: usize, k0: i64, m: i64, spacing: f64) -> Result<CliftonSet> {
    if n_points % 2 != 0 {
        return Err(Error::IncommensurateParams(format!("odd site count {n_points}")));
    }
    if k0 < 1 || m < 1 || 2 * k0 * m != n_points as i64 {
        return Err(Error::IncommensurateParams(format!("2·k0·m = 2·{k0}·{m} ≠ {n_points}")));
    }
    let config = LatticeConfig::even(spacing, n_points)?;
    let clifton_a = config.dual_point(k0);
    let a_of = |j| position_op(&config, 2, j).apply_function(|x| (clifton_a * x).cos());
    let b_of = |j| momentum_op(&config, 2, j).apply_function(|p| (PI * p / clifton_a).cos());
    let (a1, a2, b1, b2) = (a_of(1)?, a_of(2)?, b_of(1)?, b_of(2)?);
    let c = a1.mul(&a2)?.mul(&b2.mul(&b1)?)?;
    let d = a1.mul(&b2)?.mul(&a2.mul(&b1)?)?;
    for op in [&a1, &a2, &b1, &b2] {
        op.require_self_adjoint(EXACT_TOL)?;
    }
    Ok(CliftonSet { config, k0, m, clifton_a, a1, a2, b1, b2, c, d })
}

/// `U(b) = exp(i b Q)` on one particle.
pub fn phase_operator(config: &LatticeConfig, b: f64) -> Operator {
    Operator::position_diagonal(config.points().iter().map(|x| C64::from_polar(1.0, b * x)).collect())
}

/// `V(c) = exp(i c P)` on one particle, the shift `ψ(x) ↦ ψ(x + c)`.
pub fn shift_operator(config: &LatticeConfig, c: f64) -> Operator {
    Operator::momentum_diagonal(
        config.dual_points().iter().map(|p| C64::from_polar(1.0, c * p)).collect(),
        config.frame(1),
    )
}

/// `‖U(b)V(c) − e^{−ibc} V(c)U(b)‖` for a dual point `b` and lattice shift `c`.
pub fn weyl_phase_check(config: &LatticeConfig, b: f64, c: f64) -> Result<f64> {
    require_multiple(b, config.dual_point(1))?;
    require_multiple(c, config.spacing())?;
    let u = phase_operator(config, b);
    let v = shift_operator(config, c);
    let lhs = u.mul(&v)?;
    let rhs = v.mul(&u)?.scale(C64::from_polar(1.0, -b * c));
    lhs.sub(&rhs)?.operator_norm()
}

// Shifts and phases are taken modulo the box, so any integer multiple of
// the grid unit is commensurate.
fn require_multiple(value: f64, unit: f64) -> Result<()> {
    let k = (value / unit).round();
    if (value - k * unit).abs() > 1e-9 * unit.max(1.0) {
        return Err(Error::OffLattice { value });
    }
    Ok(())
}

/// Largest Weyl residual over every (dual point, lattice shift) pair.
pub fn weyl_sweep(config: &LatticeConfig) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for b in config.dual_points() {
        for c in config.points() {
            worst = worst.max(weyl_phase_check(config, b, c)?);
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CliftonRelations {
    pub n_points: usize,
    pub k0: i64,
    pub m: i64,
    pub clifton_a: f64,
    /// The nine identities, each of which must vanish.
    pub residuals: Vec<Residual>,
    /// `‖[A₁, B₁]‖`, which must not vanish.
    pub commutator_contrast: f64,
    /// `A₁B₁ + B₁A₁` rebuilt from the phase and shift expansion of both
    /// cosines, compared with the direct product.
    pub expansion_route_gap: f64,
}

impl CliftonRelations {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.value).fold(0.0, f64::max)
    }
}

pub fn clifton_relations_check(set: &CliftonSet) -> Result<CliftonRelations> {
    let norm = |op: Operator| op.densified()?.operator_norm();
    let mut residuals = Vec::with_capacity(9);
    let mut push = |name: &str, value: f64| residuals.push(Residual { name: name.into(), value });
    push("[A1,A2]", norm(commutator(&set.a1, &set.a2)?)?);
    push("[B1,B2]", norm(commutator(&set.b1, &set.b2)?)?);
    push("[A1,B2]", norm(commutator(&set.a1, &set.b2)?)?);
    push("[A2,B1]", norm(commutator(&set.a2, &set.b1)?)?);
    push("{A1,B1}", norm(anticommutator(&set.a1, &set.b1)?)?);
    push("{A2,B2}", norm(anticommutator(&set.a2, &set.b2)?)?);
    push("[A1A2,B2B1]", norm(commutator(&set.a1.mul(&set.a2)?, &set.b2.mul(&set.b1)?)?)?);
    push("[A1B2,A2B1]", norm(commutator(&set.a1.mul(&set.b2)?, &set.a2.mul(&set.b1)?)?)?);
    push("C+D", norm(set.c.add(&set.d)?)?);
    let commutator_contrast = norm(commutator(&set.a1, &set.b1)?)?;
    Ok(CliftonRelations {
        n_points: set.n_points(),
        k0: set.k0,
        m: set.m,
        clifton_a: set.clifton_a,
        residuals,
        commutator_contrast,
        expansion_route_gap: expansion_route_gap(set)?,
    })
}

// cos(aQ) = ½(U(a) + U(−a)) and cos(πP/a) = ½(V(c) + V(−c)) with c = π/a.
// Using U V = e^{−ibc} V U, the anticommutator is
// Σ_{s,t} ¼ (e^{−i s t a c} + 1) V(tc) U(sa).
fn expansion_route_gap(set: &CliftonSet) -> Result<f64> {
    let config = LatticeConfig::even(set.config.spacing(), set.n_points())?;
    let (a, c) = (set.clifton_a, set.shift());
    let mut expanded = Operator::dense(nalgebra::DMatrix::zeros(set.n_points(), set.n_points()))?;
    for s in [1.0, -1.0] {
        for t in [1.0, -1.0] {
            let weight = (C64::from_polar(1.0, -s * t * a * c) + 1.0) * 0.25;
            let term = shift_operator(&config, t * c).mul(&phase_operator(&config, s * a))?;
            expanded = expanded.add(&term.scale(weight))?;
        }
    }
    let single_a = position_op(&config, 1, 1).apply_function(|x| (a * x).cos())?;
    let single_b = momentum_op(&config, 1, 1).apply_function(|p| (PI * p / a).cos())?;
    let direct = anticommutator(&single_a, &single_b)?;
    direct.sub(&expanded)?.operator_norm()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValueAssignment {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
}

impl ValueAssignment {
    /// `v(C) = v(A₁)v(A₂)·v(B₂)v(B₁)` by multiplicativity on commuting pairs.
    pub fn value_c(&self) -> f64 {
        (self.a1 * self.a2) * (self.b2 * self.b1)
    }

    /// `v(D) = v(A₁)v(B₂)·v(A₂)v(B₁)`.
    pub fn value_d(&self) -> f64 {
        (self.a1 * self.b2) * (self.a2 * self.b1)
    }

    /// Whether `v(C) = −v(D)`, which `C = −D` demands.
    pub fn respects_c_equals_minus_d(&self) -> bool {
        self.value_c() == -self.value_d()
    }

    pub fn in_range(&self) -> bool {
        [self.a1, self.a2, self.b1, self.b2].iter().all(|v| (-1.0..=1.0).contains(v))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibleChoice {
    pub n_points: usize,
    pub k0: i64,
    pub m: i64,
    pub spacing: f64,
    pub clifton_a: f64,
    /// Smallest `|cos(a x)|` over lattice points.
    pub min_abs_a: f64,
    /// Smallest `|cos(π p / a)|` over dual points.
    pub min_abs_b: f64,
    /// `‖C + D‖` rebuilt at the admissible parameters.
    pub c_plus_d: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContradictionReport {
    pub n_points: usize,
    pub k0: i64,
    pub m: i64,
    pub sign_patterns: usize,
    /// Sign patterns with `v(C) = −v(D)`; the contradiction needs zero.
    pub consistent_patterns: usize,
    pub all_products_positive: bool,
    pub a_spectrum_has_zero: bool,
    pub b_spectrum_has_zero: bool,
    pub admissible: Option<AdmissibleChoice>,
    /// `v ≡ 0` on all four generators satisfies the product rules but sends
    /// some generator to a non-eigenvalue.
    pub zero_map_flagged: bool,
    pub chain: Vec<String>,
    pub contradiction: bool,
}

const ZERO_TOL: f64 = 1e-12;

fn spectrum_minima(config: &LatticeConfig, a: f64) -> (f64, f64) {
    let min_a = config.points().iter().map(|x| (a * x).cos().abs()).fold(f64::INFINITY, f64::min);
    let min_b = config.dual_points().iter().map(|p| (PI * p / a).cos().abs()).fold(f64::INFINITY, f64::min);
    (min_a, min_b)
}

/// Scans even site counts upward from `start` for `(k0, m)` with both cosine
/// spectra free of zeros.
pub fn find_admissible(start: usize, spacing: f64, limit: usize) -> Result<AdmissibleChoice> {
    let first = start + start % 2;
    for n_points in (first..=limit).step_by(2) {
        let half = (n_points / 2) as i64;
        for k0 in (1..=half).filter(|k| half % k == 0) {
            let m = half / k0;
            let config = LatticeConfig::even(spacing, n_points)?;
            let a = config.dual_point(k0);
            let (min_abs_a, min_abs_b) = spectrum_minima(&config, a);
            if min_abs_a > ZERO_TOL && min_abs_b > ZERO_TOL {
                let set = build_clifton_set_with_spacing(n_points, k0, m, spacing)?;
                let c_plus_d = set.c.add(&set.d)?.densified()?.operator_norm()?;
                return Ok(AdmissibleChoice { n_points, k0, m, spacing, clifton_a: a, min_abs_a, min_abs_b, c_plus_d });
            }
        }
    }
    Err(Error::InvalidParameter(format!("no admissible parameters with n_points in [{start}, {limit}]")))
}

/// Exhausts the sign patterns of a nonvanishing value map and checks that
/// parameters with nonvanishing spectra exist.
pub fn clifton_value_map_search(set: &CliftonSet) -> Result<ContradictionReport> {
    let mut consistent_patterns = 0;
    let mut all_products_positive = true;
    for bits in 0..16u32 {
        let sign = |i: u32| if bits >> i & 1 == 1 { -1.0 } else { 1.0 };
        let v = ValueAssignment { a1: sign(0), a2: sign(1), b1: sign(2), b2: sign(3) };
        all_products_positive &= v.value_c() * v.value_d() > 0.0;
        consistent_patterns += usize::from(v.respects_c_equals_minus_d());
    }

    let (min_a, min_b) = spectrum_minima(&set.config, set.clifton_a);
    let a_spectrum_has_zero = min_a <= ZERO_TOL;
    let b_spectrum_has_zero = min_b <= ZERO_TOL;
    let admissible = if a_spectrum_has_zero || b_spectrum_has_zero {
        find_admissible(set.n_points() + 2, set.config.spacing(), set.n_points() + 64).ok()
    } else {
        let c_plus_d = set.c.add(&set.d)?.densified()?.operator_norm()?;
        Some(AdmissibleChoice {
            n_points: set.n_points(),
            k0: set.k0,
            m: set.m,
            spacing: set.config.spacing(),
            clifton_a: set.clifton_a,
            min_abs_a: min_a,
            min_abs_b: min_b,
            c_plus_d,
        })
    };
    let zero_map_flagged = admissible.as_ref().is_some_and(|c| c.min_abs_a > ZERO_TOL && c.min_abs_b > ZERO_TOL);

    let chain = vec![
        "C = -D as operators".to_string(),
        "v(C) = v(A1 A2) v(B2 B1) = v(A1) v(A2) v(B2) v(B1)".to_string(),
        "v(D) = v(A1 B2) v(A2 B1) = v(A1) v(A2) v(B2) v(B1)".to_string(),
        "f(x) = -x on C = -D gives v(C) = -v(D), so v(C) = 0".to_string(),
        "hence some v(A_i) or v(B_i) vanishes".to_string(),
        "with an admissible a, 0 is not an eigenvalue of any A_i or B_i".to_string(),
    ];
    let contradiction = consistent_patterns == 0
        && all_products_positive
        && admissible.as_ref().is_some_and(|c| c.c_plus_d < SOLVER_TOL)
        && zero_map_flagged;
    Ok(ContradictionReport {
        n_points: set.n_points(),
        k0: set.k0,
        m: set.m,
        sign_patterns: 16,
        consistent_patterns,
        all_products_positive,
        a_spectrum_has_zero,
        b_spectrum_has_zero,
        admissible,
        zero_map_flagged,
        chain,
        contradiction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::random_hermitian;
    use crate::measure::SeededRng;

    #[test]
    fn von_neumann_sets() {
        let r = von_neumann_demo().unwrap();
        assert_eq!(r.attained_sums, vec![-SQRT_2, 0.0, SQRT_2]);
        assert!((r.sum_eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((r.sum_eigenvalues[1] - 1.0).abs() < 1e-12);
        assert!(r.intersection.is_empty());
        assert!(r.contradiction);
    }

    #[test]
    fn oscillator_examples() {
        assert!(oscillator_compatibility(1.0, 0.0, 1.0, 10).unwrap());
        assert!(!oscillator_compatibility(1.0, 1.0, 1.0, 10).unwrap());
        assert!(oscillator_compatibility(1.0, 1.0, 0.0, 10).is_err());
        let sweep = oscillator_sweep(1.0, 1.0, 0.1, 10.0, 100, 1000).unwrap();
        assert!(sweep.incompatible > 0);
    }

    #[test]
    fn eigenvalue_constraint_cases() {
        let r = eigenvalue_constraint_demo(&Operator::real_diagonal(&[1.0, -1.0])).unwrap();
        assert_eq!(r.spectrum, vec![-1.0, 1.0]);
        assert_eq!(r.residual, 0.0);
        let r = eigenvalue_constraint_demo(&Operator::identity(3)).unwrap();
        assert_eq!(r.spectrum, vec![1.0]);
        let mut g = SeededRng::new(3).generator();
        let r = eigenvalue_constraint_demo(&random_hermitian(4, &mut g)).unwrap();
        assert!(r.residual < 1e-10);
        let skew = Operator::from_rows(&[vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)], vec![C64::new(0.0, 0.0); 2]]).unwrap();
        assert!(matches!(eigenvalue_constraint_demo(&skew), Err(Error::NotSelfAdjoint { .. })));
    }

    #[test]
    fn clifton_parameters() {
        let s = build_clifton_set(8, 1, 4).unwrap();
        assert!((s.clifton_a - PI / 4.0).abs() < 1e-15);
        assert!((s.shift() - 4.0).abs() < 1e-12);
        assert!(build_clifton_set(8, 2, 2).is_ok());
        assert!(matches!(build_clifton_set(9, 1, 4), Err(Error::IncommensurateParams(_))));
        assert!(matches!(build_clifton_set(8, 1, 3), Err(Error::IncommensurateParams(_))));
    }

    #[test]
    fn weyl_edge_cases() {
        let c = LatticeConfig::even(1.0, 8).unwrap();
        assert_eq!(weyl_phase_check(&c, 0.0, 3.0).unwrap(), 0.0);
        assert!(weyl_phase_check(&c, c.dual_point(1), 0.0).unwrap() < 1e-15);
        let b = c.dual_point(1);
        assert!((b * 4.0 - PI).abs() < 1e-15);
        assert!(weyl_phase_check(&c, b, 4.0).unwrap() < 1e-12);
        assert!(matches!(weyl_phase_check(&c, 0.3, 1.0), Err(Error::OffLattice { .. })));
    }

    #[test]
    fn weyl_all_pairs() {
        for n in [8, 12, 16] {
            let c = LatticeConfig::even(1.0, n).unwrap();
            assert!(weyl_sweep(&c).unwrap() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn relations_hold() {
        for (n, k0, m) in [(8, 1, 4), (8, 2, 2), (10, 1, 5)] {
            let r = clifton_relations_check(&build_clifton_set(n, k0, m).unwrap()).unwrap();
            assert_eq!(r.residuals.len(), 9);
            assert!(r.max_residual() < 1e-10, "{r:?}");
            assert!(r.commutator_contrast > 0.5);
            assert!(r.expansion_route_gap < 1e-11);
        }
    }

    #[test]
    fn sign_patterns_never_consistent() {
        let r = clifton_value_map_search(&build_clifton_set(8, 1, 4).unwrap()).unwrap();
        assert_eq!(r.sign_patterns, 16);
        assert_eq!(r.consistent_patterns, 0);
        assert!(r.all_products_positive);
        assert!(r.a_spectrum_has_zero);
        assert!(!r.b_spectrum_has_zero);
        let alt = r.admissible.unwrap();
        assert_eq!((alt.n_points, alt.k0, alt.m), (10, 1, 5));
        assert!(alt.min_abs_a > 0.1);
        assert!(r.zero_map_flagged);
        assert!(r.contradiction);
    }

    #[test]
    fn admissible_set_reports_itself() {
        let r = clifton_value_map_search(&build_clifton_set(6, 1, 3).unwrap()).unwrap();
        assert!(!r.a_spectrum_has_zero && !r.b_spectrum_has_zero);
        assert_eq!(r.admissible.unwrap().n_points, 6);
        assert!(r.contradiction);
    }

    #[test]
    fn zero_map_satisfies_products() {
        let v = ValueAssignment { a1: 0.0, a2: 0.0, b1: 0.0, b2: 0.0 };
        assert!(v.respects_c_equals_minus_d());
        assert!(v.in_range());
    }
}
