//! Projective measurement with collapse, seeded per-trial random streams, and
//! the statistical checks built on them: perfect correlations on maximally
//! entangled states and functional consistency of commuting families.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::entangle::{partner_operator, MaximallyEntangledState};
use crate::error::{Error, Result};
use crate::hilbert::{commutator, Eigenspace, Operator, StateVector, C64, CLUSTER_TOL, SOLVER_TOL};

/// A reproducible random stream keyed by `(seed, stream_id)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SeededRng {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream_id: 0 }
    }

    pub fn with_stream(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Independent child stream for trial `index`; the result depends only on
    /// `(seed, stream_id, index)`, never on scheduling.
    pub fn for_trial(&self, index: u64) -> Self {
        Self { seed: self.seed, stream_id: splitmix64(self.stream_id ^ splitmix64(index)) }
    }

    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub eigenvalue: f64,
    pub probability: f64,
}

#[derive(Clone, Debug)]
pub struct MeasurementRecord {
    pub eigenvalue: f64,
    pub probability: f64,
    pub post_state: StateVector,
}

/// A self-adjoint observable resolved once into its eigenspaces, ready to be
/// measured many times.
#[derive(Clone, Debug)]
pub struct ProjectiveMeasurement {
    dim: usize,
    spaces: Vec<Eigenspace>,
}

impl ProjectiveMeasurement {
    pub fn new(op: &Operator) -> Result<Self> {
        Ok(Self { dim: op.dim(), spaces: op.spectral_resolution()? })
    }

    pub fn eigenspaces(&self) -> &[Eigenspace] {
        &self.spaces
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.spaces.iter().all(|s| s.multiplicity() == 1)
    }

    fn check(&self, state: &StateVector) -> Result<()> {
        if state.dim() == self.dim {
            Ok(())
        } else {
            Err(Error::DimMismatch { left: self.dim, right: state.dim() })
        }
    }

    pub fn distribution(&self, state: &StateVector) -> Result<Vec<Outcome>> {
        self.check(state)?;
        let total = state.norm_sqr();
        if total == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(self
            .spaces
            .iter()
            .map(|s| Outcome { eigenvalue: s.eigenvalue, probability: s.project(state).norm_sqr() / total })
            .collect())
    }

    pub fn measure<R: Rng + ?Sized>(&self, state: &StateVector, rng: &mut R) -> Result<MeasurementRecord> {
        self.check(state)?;
        let total = state.norm_sqr();
        if total == 0.0 {
            return Err(Error::ZeroVector);
        }
        let draw: f64 = rng.random::<f64>() * total;
        let mut cumulative = 0.0;
        let mut last = None;
        for space in &self.spaces {
            let projected = space.project(state);
            let weight = projected.norm_sqr();
            if weight <= 0.0 {
                continue;
            }
            cumulative += weight;
            last = Some((space.eigenvalue, weight, projected));
            if draw < cumulative {
                break;
            }
        }
        // rounding can leave `draw` a hair above the final cumulative sum
        let (eigenvalue, weight, projected) = last.ok_or(Error::ZeroVector)?;
        Ok(MeasurementRecord { eigenvalue, probability: weight / total, post_state: projected.normalize()? })
    }
}

/// Born probabilities of each distinct eigenvalue of `op` in `state`.
pub fn born_distribution(state: &StateVector, op: &Operator) -> Result<Vec<Outcome>> {
    if state.dim() != op.dim() {
        return Err(Error::DimMismatch { left: op.dim(), right: state.dim() });
    }
    ProjectiveMeasurement::new(op)?.distribution(state)
}

/// Samples an eigenvalue with its Born probability and collapses the state
/// onto the corresponding eigenspace.
pub fn measure_collapse(state: &StateVector, op: &Operator, rng: &SeededRng) -> Result<MeasurementRecord> {
    if state.dim() != op.dim() {
        return Err(Error::DimMismatch { left: op.dim(), right: state.dim() });
    }
    ProjectiveMeasurement::new(op)?.measure(state, &mut rng.generator())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerfectCorrelationReport {
    pub seed: SeededRng,
    pub trials: usize,
    pub matches: usize,
    /// Number of trials per eigenvalue, in ascending eigenvalue order.
    pub outcome_counts: Vec<(f64, usize)>,
}

impl PerfectCorrelationReport {
    pub fn all_matched(&self) -> bool {
        self.matches == self.trials
    }
}

/// Measures the partner `Õ` on system 2, then `O` on system 1 of the
/// collapsed state, and counts how often the two eigenvalues coincide.
pub fn perfect_correlation_trial(
    state: &MaximallyEntangledState,
    o: &Operator,
    rng: SeededRng,
    trials: usize,
) -> Result<PerfectCorrelationReport> {
    let single = ProjectiveMeasurement::new(o)?;
    if let Some(s) = single.eigenspaces().iter().find(|s| s.multiplicity() > 1) {
        return Err(Error::DegenerateSpectrum { eigenvalue: s.eigenvalue, multiplicity: s.multiplicity() });
    }
    let partner = partner_operator(state, o)?;
    let on_system2 = ProjectiveMeasurement::new(&state.system2_operator(&partner)?)?;
    let on_system1 = ProjectiveMeasurement::new(&state.system1_operator(o)?)?;

    let results: Vec<(f64, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut g = rng.for_trial(i).generator();
            let second = on_system2.measure(state.psi(), &mut g)?;
            let first = on_system1.measure(&second.post_state, &mut g)?;
            Ok((second.eigenvalue, (first.eigenvalue - second.eigenvalue).abs() <= CLUSTER_TOL))
        })
        .collect::<Result<_>>()?;

    let levels: Vec<f64> = single.eigenspaces().iter().map(|s| s.eigenvalue).collect();
    let mut counts = vec![0usize; levels.len()];
    let mut matches = 0;
    for (value, ok) in results {
        matches += usize::from(ok);
        if let Some(k) = levels.iter().position(|l| (l - value).abs() <= CLUSTER_TOL) {
            counts[k] += 1;
        }
    }
    Ok(PerfectCorrelationReport {
        seed: rng,
        trials,
        matches,
        outcome_counts: levels.into_iter().zip(counts).collect(),
    })
}

/// Joint eigenspaces of a commuting family together with the eigenvalue
/// tuple each operator takes on them.
#[derive(Clone, Debug)]
pub struct JointResolution {
    pub values: Vec<Vec<f64>>,
    pub measurement: ProjectiveMeasurement,
}

fn require_commuting(ops: &[Operator]) -> Result<()> {
    for (i, a) in ops.iter().enumerate() {
        for b in &ops[i + 1..] {
            let residual = commutator(a, b)?.max_abs()?;
            if residual >= SOLVER_TOL {
                return Err(Error::NotCommuting { residual });
            }
        }
    }
    Ok(())
}

/// Simultaneous diagonalization of commuting self-adjoint operators through
/// the eigenspaces of a random real combination `Σ r_i A_i`.
pub fn joint_resolution(ops: &[Operator], rng: &SeededRng) -> Result<JointResolution> {
    let first = ops.first().ok_or_else(|| Error::InvalidParameter("empty operator family".into()))?;
    for op in ops {
        if op.dim() != first.dim() {
            return Err(Error::DimMismatch { left: first.dim(), right: op.dim() });
        }
        op.require_self_adjoint(SOLVER_TOL)?;
    }
    require_commuting(ops)?;
    let mut g = rng.generator();
    'attempt: for _ in 0..8 {
        let mut combo = Operator::Dense(DMatrix::zeros(first.dim(), first.dim()));
        for op in ops {
            let r: f64 = 1.0 + g.random::<f64>();
            combo = combo.add(&op.scale(C64::new(r, 0.0)))?;
        }
        let measurement = ProjectiveMeasurement::new(&combo)?;
        let mut values = Vec::with_capacity(measurement.eigenspaces().len());
        for space in measurement.eigenspaces() {
            // any unit vector of the joint eigenspace reveals the tuple
            let probe = (0..first.dim())
                .map(|i| space.project(&StateVector::basis(first.dim(), i)))
                .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
                .expect("nonempty")
                .normalize()?;
            let mut tuple = Vec::with_capacity(ops.len());
            for op in ops {
                let image = op.apply(&probe)?;
                let value = probe.inner(&image).re;
                if image.sub(&probe.scale(C64::new(value, 0.0)))?.norm() > 1e-8 {
                    continue 'attempt;
                }
                tuple.push(value);
            }
            values.push(tuple);
        }
        return Ok(JointResolution { values, measurement });
    }
    Err(Error::InvalidParameter("could not separate joint eigenspaces".into()))
}

/// `f(A₁, …, A_n) = Σ f(λ₁, …, λ_n) P_λ` over joint eigenspaces.
pub fn function_of_commuting(
    ops: &[Operator],
    f: &dyn Fn(&[f64]) -> f64,
    rng: &SeededRng,
) -> Result<Operator> {
    let joint = joint_resolution(ops, rng)?;
    Ok(assemble(&joint, f))
}

fn assemble(joint: &JointResolution, f: &dyn Fn(&[f64]) -> f64) -> Operator {
    let n = joint.measurement.dim;
    let mut m = DMatrix::zeros(n, n);
    for (space, tuple) in joint.measurement.eigenspaces().iter().zip(&joint.values) {
        let value = C64::new(f(tuple), 0.0);
        for j in 0..n {
            let col = space.project(&StateVector::basis(n, j));
            for (i, a) in col.amplitudes().iter().enumerate() {
                m[(i, j)] += a * value;
            }
        }
    }
    Operator::Dense(m)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub seed: SeededRng,
    pub trials: usize,
    pub consistent: usize,
    pub max_deviation: f64,
}

impl ConsistencyReport {
    pub fn all_consistent(&self) -> bool {
        self.consistent == self.trials
    }
}

/// Jointly measures a commuting family, evaluates `f` on the outcomes, then
/// measures `B = f(A₁, …, A_n)` on the collapsed state and compares.
pub fn function_consistency_check(
    state: &StateVector,
    ops: &[Operator],
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    rng: SeededRng,
    trials: usize,
) -> Result<ConsistencyReport> {
    let joint = joint_resolution(ops, &rng)?;
    let b = assemble(&joint, f);
    let measure_b = ProjectiveMeasurement::new(&b)?;
    let deviations: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut g = rng.for_trial(i).generator();
            let joint_outcome = joint.measurement.measure(state, &mut g)?;
            let k = joint
                .measurement
                .eigenspaces()
                .iter()
                .position(|s| s.eigenvalue == joint_outcome.eigenvalue)
                .expect("outcome comes from the resolution");
            let predicted = f(&joint.values[k]);
            let measured = measure_b.measure(&joint_outcome.post_state, &mut g)?;
            Ok((measured.eigenvalue - predicted).abs())
        })
        .collect::<Result<_>>()?;
    let consistent = deviations.iter().filter(|&&d| d <= 1e-8).count();
    Ok(ConsistencyReport {
        seed: rng,
        trials,
        consistent,
        max_deviation: deviations.iter().copied().fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entangle::{build_from_bases, singlet};
    use crate::hilbert::{random_hermitian, random_state, tensor_op, tensor_state, Basis};

    fn random_mes(n: usize, seed: u64) -> MaximallyEntangledState {
        let mut g = SeededRng::new(seed).generator();
        build_from_bases(&Basis::random(n, &mut g), &Basis::random(n, &mut g)).unwrap()
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let rng = SeededRng::new(42);
        let a: Vec<u64> = (0..4).map(|_| rng.for_trial(3).generator().random()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let b: u64 = rng.for_trial(4).generator().random();
        assert_ne!(a[0], b);
    }

    #[test]
    fn maximally_entangled_outcomes_are_uniform() {
        for n in [2, 3, 5] {
            let s = random_mes(n, n as u64);
            let mut g = SeededRng::new(9).generator();
            let o = random_hermitian(n, &mut g);
            let dist = born_distribution(s.psi(), &s.system1_operator(&o).unwrap()).unwrap();
            assert_eq!(dist.len(), n);
            for outcome in dist {
                assert!((outcome.probability - 1.0 / n as f64).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn eigenstate_has_certain_outcome() {
        let up = StateVector::from_real(&[1.0, 0.0]).unwrap();
        let dist = born_distribution(&up, &Operator::pauli_z()).unwrap();
        assert_eq!(dist.iter().filter(|o| o.probability > 0.0).count(), 1);
        assert_eq!(dist[1], Outcome { eigenvalue: 1.0, probability: 1.0 });
        let record = measure_collapse(&up, &Operator::pauli_z(), &SeededRng::new(1)).unwrap();
        assert_eq!(record.eigenvalue, 1.0);
        assert!(record.post_state.phase_distance(&up) < 1e-12);
    }

    #[test]
    fn probabilities_match_projector_oracle() {
        let mut g = SeededRng::new(17).generator();
        let v = random_state(4, &mut g);
        let o = random_hermitian(4, &mut g);
        let dist = born_distribution(&v, &o).unwrap();
        let total: f64 = dist.iter().map(|d| d.probability).sum();
        assert!((total - 1.0).abs() < 1e-10);
        // oracle: |⟨φ|v⟩|² from eigenvectors found by inverse iteration on (O - λ)
        let m = o.to_dense().unwrap();
        for d in dist {
            let shifted = &m - DMatrix::<C64>::identity(4, 4) * C64::new(d.eigenvalue + 1e-9, 0.0);
            let inv = shifted.try_inverse().unwrap();
            let mut x = DMatrix::<C64>::from_element(4, 1, C64::new(1.0, 0.3));
            for _ in 0..3 {
                x = &inv * x;
                let n = x.norm();
                x /= C64::new(n, 0.0);
            }
            let overlap = (x.adjoint() * v.to_column())[(0, 0)].norm_sqr();
            assert!((overlap - d.probability).abs() < 1e-10);
        }
    }

    #[test]
    fn singlet_collapse_gives_product_state() {
        let s = singlet();
        let o1 = s.system1_operator(&Operator::pauli_z()).unwrap();
        let measurement = ProjectiveMeasurement::new(&o1).unwrap();
        let mut seen_plus = false;
        for i in 0..20 {
            let r = measurement.measure(s.psi(), &mut SeededRng::new(5).for_trial(i).generator()).unwrap();
            if r.eigenvalue == 1.0 {
                let (psi1, phi1) = (s.u().image_basis().vector(0), s.u().domain_basis().vector(0));
                assert!(r.post_state.phase_distance(&tensor_state(psi1, phi1)) < 1e-12);
                seen_plus = true;
            }
            assert!((r.probability - 0.5).abs() < 1e-12);
        }
        assert!(seen_plus);
    }

    #[test]
    fn empirical_frequencies_within_three_sigma() {
        let n = 5;
        let s = random_mes(n, 77);
        let mut g = SeededRng::new(78).generator();
        let o = s.system1_operator(&random_hermitian(n, &mut g)).unwrap();
        let m = ProjectiveMeasurement::new(&o).unwrap();
        let draws = 100_000;
        let mut counts = vec![0usize; n];
        let mut g = SeededRng::new(79).generator();
        for _ in 0..draws {
            let r = m.measure(s.psi(), &mut g).unwrap();
            let k = m.eigenspaces().iter().position(|e| e.eigenvalue == r.eigenvalue).unwrap();
            counts[k] += 1;
        }
        let p = 1.0 / n as f64;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() < 3.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn repeated_measurement_is_idempotent() {
        let mut g = SeededRng::new(21).generator();
        let o = random_hermitian(4, &mut g);
        let m = ProjectiveMeasurement::new(&o).unwrap();
        let v = random_state(4, &mut g);
        for _ in 0..50 {
            let first = m.measure(&v, &mut g).unwrap();
            let second = m.measure(&first.post_state, &mut g).unwrap();
            assert_eq!(first.eigenvalue, second.eigenvalue);
        }
    }

    #[test]
    fn singlet_perfect_correlations() {
        let report = perfect_correlation_trial(&singlet(), &Operator::pauli_z(), SeededRng::new(3), 10_000).unwrap();
        assert!(report.all_matched());
        assert_eq!(report.outcome_counts.iter().map(|c| c.1).sum::<usize>(), 10_000);
    }

    #[test]
    fn degenerate_observable_is_rejected() {
        let err = perfect_correlation_trial(&singlet(), &Operator::identity(2), SeededRng::new(3), 10).unwrap_err();
        assert_eq!(err, Error::DegenerateSpectrum { eigenvalue: 1.0, multiplicity: 2 });
    }

    #[test]
    fn random_perfect_correlations_and_reproducibility() {
        let s = random_mes(3, 31);
        let mut g = SeededRng::new(32).generator();
        let o = random_hermitian(3, &mut g);
        let a = perfect_correlation_trial(&s, &o, SeededRng::new(33), 1000).unwrap();
        assert!(a.all_matched());
        let b = perfect_correlation_trial(&s, &o, SeededRng::new(33), 1000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn product_of_commuting_spins() {
        let z = Operator::pauli_z();
        let id = Operator::identity(2);
        let ops = vec![tensor_op(&z, &id).unwrap(), tensor_op(&id, &z).unwrap()];
        let product = |v: &[f64]| v[0] * v[1];
        let b = function_of_commuting(&ops, &product, &SeededRng::new(1)).unwrap();
        assert!(b.max_abs_diff(&ops[0].mul(&ops[1]).unwrap()).unwrap() < 1e-10);
        let mut g = SeededRng::new(2).generator();
        let v = random_state(4, &mut g);
        let report = function_consistency_check(&v, &ops, &product, SeededRng::new(3), 500).unwrap();
        assert!(report.all_consistent());
    }

    #[test]
    fn single_operator_identity_function() {
        let mut g = SeededRng::new(4).generator();
        let o = random_hermitian(3, &mut g);
        let v = random_state(3, &mut g);
        let report = function_consistency_check(&v, &[o], &|x: &[f64]| x[0], SeededRng::new(5), 200).unwrap();
        assert!(report.all_consistent());
    }

    #[test]
    fn square_function_matches_spectral_calculus() {
        let o = Operator::real_diagonal(&[1.0, -1.0, 2.0]);
        let square = |x: &[f64]| x[0] * x[0];
        let b = function_of_commuting(std::slice::from_ref(&o), &square, &SeededRng::new(6)).unwrap();
        assert!(b.max_abs_diff(&o.mul(&o).unwrap()).unwrap() < 1e-10);
        let mut g = SeededRng::new(7).generator();
        let v = random_state(3, &mut g);
        let report = function_consistency_check(&v, &[o], &square, SeededRng::new(8), 1000).unwrap();
        assert_eq!(report.consistent, 1000);
    }

    #[test]
    fn non_commuting_family_is_rejected() {
        let ops = vec![Operator::pauli_x(), Operator::pauli_z()];
        let v = StateVector::from_real(&[1.0, 0.0]).unwrap();
        let err = function_consistency_check(&v, &ops, &|x: &[f64]| x[0], SeededRng::new(1), 1).unwrap_err();
        assert!(matches!(err, Error::NotCommuting { .. }));
    }
}
