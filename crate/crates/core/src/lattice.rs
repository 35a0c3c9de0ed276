//! Regularized EPR pairs on a finite periodic lattice.
//!
//! Sites are `x = n·h` for integer labels `n` in a window of `n_points`
//! consecutive integers: `[-M, M]` for the odd lattice with `2M + 1` sites,
//! `[-N/2, N/2)` for an even lattice of `N` sites. Momenta use the same label
//! window, `p = 2πk / (h·n_points)`. Every shift is done on integer labels
//! modulo `n_points`, i.e. modulo the full box length `n_points·h`.
//!
//! The Fourier transform is unitary, `1/√n_points` per particle axis, with
//! kernel `exp(-i x p)`.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::entangle::schmidt_coefficients;
use crate::error::{Error, Result};
use crate::hilbert::{FourierFrame, Operator, StateVector, C64};
use crate::measure::{ProjectiveMeasurement, SeededRng};

/// Largest site count per axis for which a four-particle state may be
/// expanded into a dense amplitude array.
pub const FOUR_PARTICLE_DENSE_CAP: usize = 13;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticeConfig {
    spacing: f64,
    n_points: usize,
    offset: i64,
}

impl LatticeConfig {
    /// `2M + 1` sites with labels `-M..=M`.
    pub fn odd(spacing: f64, half_count: usize) -> Result<Self> {
        check_spacing(spacing)?;
        if half_count < 1 {
            return Err(Error::InvalidParameter("half count M must be at least 1".into()));
        }
        Ok(Self { spacing, n_points: 2 * half_count + 1, offset: -(half_count as i64) })
    }

    /// `N` sites (N even) with labels `-N/2..N/2`.
    pub fn even(spacing: f64, n_points: usize) -> Result<Self> {
        check_spacing(spacing)?;
        if n_points < 2 || n_points % 2 != 0 {
            return Err(Error::InvalidParameter(format!("even lattice needs an even site count, got {n_points}")));
        }
        Ok(Self { spacing, n_points, offset: -((n_points / 2) as i64) })
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn is_odd(&self) -> bool {
        self.n_points % 2 == 1
    }

    /// `M` for the odd lattice.
    pub fn half_count(&self) -> Option<usize> {
        self.is_odd().then_some(self.n_points / 2)
    }

    pub fn box_length(&self) -> f64 {
        self.n_points as f64 * self.spacing
    }

    /// Integer labels in storage order.
    pub fn labels(&self) -> impl Iterator<Item = i64> + Clone {
        self.offset..self.offset + self.n_points as i64
    }

    pub fn first_label(&self) -> i64 {
        self.offset
    }

    pub fn point(&self, label: i64) -> f64 {
        label as f64 * self.spacing
    }

    pub fn dual_point(&self, label: i64) -> f64 {
        2.0 * PI * label as f64 / (self.spacing * self.n_points as f64)
    }

    pub fn points(&self) -> Vec<f64> {
        self.labels().map(|n| self.point(n)).collect()
    }

    pub fn dual_points(&self) -> Vec<f64> {
        self.labels().map(|k| self.dual_point(k)).collect()
    }

    /// Brings any integer label back into the window, modulo `n_points`.
    pub fn wrap(&self, label: i64) -> i64 {
        (label - self.offset).rem_euclid(self.n_points as i64) + self.offset
    }

    /// Storage slot of a label already inside the window.
    pub fn slot(&self, label: i64) -> usize {
        debug_assert_eq!(self.wrap(label), label);
        (label - self.offset) as usize
    }

    pub fn contains_label(&self, label: i64) -> bool {
        label >= self.offset && label < self.offset + self.n_points as i64
    }

    /// Label of the site at `x`, or `OffLattice`.
    pub fn site_of(&self, x: f64) -> Result<i64> {
        let label = (x / self.spacing).round();
        if (x - label * self.spacing).abs() > 1e-9 * self.spacing.max(1.0) || !self.contains_label(label as i64) {
            return Err(Error::OffLattice { value: x });
        }
        Ok(label as i64)
    }

    /// Label of the dual point at `p`, or `OffLattice`.
    pub fn dual_site_of(&self, p: f64) -> Result<i64> {
        let unit = self.dual_point(1);
        let label = (p / unit).round();
        if (p - label * unit).abs() > 1e-9 * unit.max(1.0) || !self.contains_label(label as i64) {
            return Err(Error::OffLattice { value: p });
        }
        Ok(label as i64)
    }

    pub fn frame(&self, n_particles: usize) -> FourierFrame {
        FourierFrame::new(n_particles, self.n_points, self.offset)
    }

    pub fn dim(&self, n_particles: usize) -> usize {
        self.n_points.pow(n_particles as u32)
    }

    /// Label tuple of a storage index (particle 1 slowest).
    pub fn labels_of(&self, index: usize, n_particles: usize) -> Vec<i64> {
        let n = self.n_points;
        let mut out = vec![0; n_particles];
        let mut rest = index;
        for slot in out.iter_mut().rev() {
            *slot = (rest % n) as i64 + self.offset;
            rest /= n;
        }
        out
    }

    pub fn index_of(&self, labels: &[i64]) -> usize {
        labels.iter().fold(0, |acc, &l| acc * self.n_points + self.slot(self.wrap(l)))
    }
}

fn check_spacing(spacing: f64) -> Result<()> {
    if spacing > 0.0 && spacing.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("lattice spacing must be positive, got {spacing}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Domain {
    Position,
    Momentum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeState {
    config: LatticeConfig,
    n_particles: usize,
    domain: Domain,
    amplitudes: StateVector,
}

impl LatticeState {
    pub fn new(config: LatticeConfig, n_particles: usize, amplitudes: StateVector) -> Result<Self> {
        if !(1..=4).contains(&n_particles) {
            return Err(Error::InvalidParameter(format!("{n_particles} particles")));
        }
        let dim = config.dim(n_particles);
        if amplitudes.dim() != dim {
            return Err(Error::DimMismatch { left: dim, right: amplitudes.dim() });
        }
        Ok(Self { config, n_particles, domain: Domain::Position, amplitudes: amplitudes.normalize()? })
    }

    /// A single particle localized at site `label`.
    pub fn delta(config: LatticeConfig, label: i64) -> Self {
        let dim = config.n_points();
        Self {
            config,
            n_particles: 1,
            domain: Domain::Position,
            amplitudes: StateVector::basis(dim, config.slot(config.wrap(label))),
        }
    }

    /// `exp(i x p)` for the dual point with label `k`, normalized.
    pub fn plane_wave(config: LatticeConfig, k: i64) -> Self {
        let amps = config.labels().map(|n| C64::from_polar(1.0, phase(&config, n, k))).collect();
        Self::new(config, 1, StateVector::new(amps).expect("nonempty")).expect("consistent dims")
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn amplitudes(&self) -> &StateVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, labels: &[i64]) -> C64 {
        self.amplitudes.amplitudes()[self.config.index_of(labels)]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }
}

// x·p for labels (n, k), reduced through the integer product so the phase
// is an exact root of unity.
fn phase(config: &LatticeConfig, n: i64, k: i64) -> f64 {
    let r = (n * k).rem_euclid(config.n_points as i64);
    2.0 * PI * r as f64 / config.n_points as f64
}

/// Position amplitudes to momentum amplitudes.
pub fn dft(state: &LatticeState) -> LatticeState {
    let frame = state.config.frame(state.n_particles);
    LatticeState {
        domain: Domain::Momentum,
        amplitudes: StateVector::new(frame.forward(state.amplitudes.amplitudes())).expect("nonempty"),
        ..state.clone()
    }
}

/// Momentum amplitudes back to position amplitudes.
pub fn idft(state: &LatticeState) -> LatticeState {
    let frame = state.config.frame(state.n_particles);
    LatticeState {
        domain: Domain::Position,
        amplitudes: StateVector::new(frame.inverse(state.amplitudes.amplitudes())).expect("nonempty"),
        ..state.clone()
    }
}

/// `Σ_p exp(i x p)` over the dual lattice, evaluated in floating point from
/// the point values themselves.
pub fn orthogonality_sum(config: &LatticeConfig, x: f64) -> Result<C64> {
    config.site_of(x)?;
    Ok(config.dual_points().iter().map(|p| C64::from_polar(1.0, x * p)).sum())
}

/// `Σ_x exp(i x p)` over the lattice.
pub fn dual_orthogonality_sum(config: &LatticeConfig, p: f64) -> Result<C64> {
    config.dual_site_of(p)?;
    Ok(config.points().iter().map(|x| C64::from_polar(1.0, x * p)).sum())
}

/// `Q_j`, diagonal in position with entries `x_j`. Particles count from 1.
pub fn position_op(config: &LatticeConfig, n_particles: usize, particle: usize) -> Operator {
    assert!((1..=n_particles).contains(&particle), "particle {particle} of {n_particles}");
    let diag = (0..config.dim(n_particles))
        .map(|i| C64::new(config.point(config.labels_of(i, n_particles)[particle - 1]), 0.0))
        .collect();
    Operator::position_diagonal(diag)
}

/// `P_j`, diagonal in momentum with entries `p_j`.
pub fn momentum_op(config: &LatticeConfig, n_particles: usize, particle: usize) -> Operator {
    assert!((1..=n_particles).contains(&particle), "particle {particle} of {n_particles}");
    let diag = (0..config.dim(n_particles))
        .map(|i| C64::new(config.dual_point(config.labels_of(i, n_particles)[particle - 1]), 0.0))
        .collect();
    Operator::momentum_diagonal(diag, config.frame(n_particles))
}

/// The offset `x₀` of an EPR pair, held as a site label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EprParams {
    pub x0_label: i64,
}

impl EprParams {
    pub fn new(config: &LatticeConfig, x0: f64) -> Result<Self> {
        Ok(Self { x0_label: config.site_of(x0)? })
    }

    pub fn from_label(config: &LatticeConfig, label: i64) -> Result<Self> {
        if !config.contains_label(label) {
            return Err(Error::OffLattice { value: config.point(label) });
        }
        Ok(Self { x0_label: label })
    }
}

/// Unnormalized pair amplitudes `Σ_p exp(i (x₁ − x₂ + x₀) p)`, with the
/// argument reduced into the box first.
pub fn epr_fourier_form(config: &LatticeConfig, params: EprParams) -> Vec<C64> {
    let duals = config.dual_points();
    let mut out = Vec::with_capacity(config.dim(2));
    for x1 in config.labels() {
        for x2 in config.labels() {
            let arg = config.point(config.wrap(x1 - x2 + params.x0_label));
            out.push(duals.iter().map(|p| C64::from_polar(1.0, arg * p)).sum());
        }
    }
    out
}

/// Unnormalized `n_points · δ(x₁ − x₂ + x₀)`.
pub fn epr_delta_form(config: &LatticeConfig, params: EprParams) -> Vec<C64> {
    let n = config.n_points() as f64;
    let mut out = Vec::with_capacity(config.dim(2));
    for x1 in config.labels() {
        for x2 in config.labels() {
            let on = config.wrap(x1 - x2 + params.x0_label) == 0;
            out.push(C64::new(if on { n } else { 0.0 }, 0.0));
        }
    }
    out
}

/// Unnormalized `Σ_x δ_s(x − x₂ + x₀) δ_s(x₁ − x)` with `δ_s = √n · δ`.
pub fn epr_convolution_form(config: &LatticeConfig, params: EprParams) -> Vec<C64> {
    let root = (config.n_points() as f64).sqrt();
    let delta = |label: i64| if config.wrap(label) == 0 { root } else { 0.0 };
    let mut out = Vec::with_capacity(config.dim(2));
    for x1 in config.labels() {
        for x2 in config.labels() {
            let v: f64 = config.labels().map(|x| delta(x - x2 + params.x0_label) * delta(x1 - x)).sum();
            out.push(C64::new(v, 0.0));
        }
    }
    out
}

/// Normalized two-particle EPR state, supported on `x₂ = x₁ + x₀` (mod box).
pub fn build_epr_state(config: &LatticeConfig, params: EprParams) -> Result<LatticeState> {
    EprParams::from_label(config, params.x0_label)?;
    LatticeState::new(*config, 2, StateVector::new(epr_delta_form(config, params))?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MeasurementOrder {
    FirstThenSecond,
    SecondThenFirst,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EprCorrelationReport {
    pub seed: SeededRng,
    pub trials: usize,
    pub matches: usize,
    /// How often each label came up in the first measurement.
    pub first_outcome_counts: Vec<(i64, usize)>,
    /// Largest deviation of those counts from a uniform distribution, in
    /// binomial standard deviations.
    pub max_uniform_deviation_sigma: f64,
}

impl EprCorrelationReport {
    pub fn all_matched(&self) -> bool {
        self.matches == self.trials
    }
}

fn correlation_run(
    state: &LatticeState,
    first: &Operator,
    second: &Operator,
    label_of: impl Fn(f64) -> Result<i64>,
    expected: impl Fn(i64) -> i64,
    rng: SeededRng,
    trials: usize,
) -> Result<EprCorrelationReport> {
    let m1 = ProjectiveMeasurement::new(first)?;
    let m2 = ProjectiveMeasurement::new(second)?;
    let config = state.config;
    let mut counts = vec![0usize; config.n_points()];
    let mut matches = 0;
    for i in 0..trials as u64 {
        let mut g = rng.for_trial(i).generator();
        let a = m1.measure(state.amplitudes(), &mut g)?;
        let b = m2.measure(&a.post_state, &mut g)?;
        let (la, lb) = (label_of(a.eigenvalue)?, label_of(b.eigenvalue)?);
        counts[config.slot(la)] += 1;
        matches += usize::from(lb == config.wrap(expected(la)));
    }
    let p = 1.0 / config.n_points() as f64;
    let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
    let max_dev = counts.iter().map(|&c| (c as f64 - trials as f64 * p).abs() / sigma).fold(0.0, f64::max);
    Ok(EprCorrelationReport {
        seed: rng,
        trials,
        matches,
        first_outcome_counts: config.labels().zip(counts).collect(),
        max_uniform_deviation_sigma: max_dev,
    })
}

/// Sequential position measurements on an EPR pair: the second result must
/// equal the first shifted by `x₀` (or by `-x₀` in reversed order).
pub fn epr_position_correlation(
    state: &LatticeState,
    params: EprParams,
    order: MeasurementOrder,
    rng: SeededRng,
    trials: usize,
) -> Result<EprCorrelationReport> {
    let config = state.config;
    let q1 = position_op(&config, 2, 1);
    let q2 = position_op(&config, 2, 2);
    let x0 = params.x0_label;
    let label_of = |x: f64| config.site_of(x);
    match order {
        MeasurementOrder::FirstThenSecond => correlation_run(state, &q1, &q2, label_of, |x1| x1 + x0, rng, trials),
        MeasurementOrder::SecondThenFirst => correlation_run(state, &q2, &q1, label_of, |x2| x2 - x0, rng, trials),
    }
}

/// Sequential momentum measurements on an EPR pair: `p₂ = −p₁` (mod the
/// dual box).
pub fn epr_momentum_correlation(state: &LatticeState, rng: SeededRng, trials: usize) -> Result<EprCorrelationReport> {
    let config = state.config;
    let p1 = momentum_op(&config, 2, 1);
    let p2 = momentum_op(&config, 2, 2);
    correlation_run(state, &p1, &p2, |p| config.dual_site_of(p), |k| -k, rng, trials)
}

/// Product of two EPR pairs on particles (1, 3) and (2, 4), kept in factored
/// form.
#[derive(Clone, Debug, PartialEq)]
pub struct FourParticleState {
    pair: LatticeState,
    params: EprParams,
}

impl FourParticleState {
    pub fn config(&self) -> &LatticeConfig {
        &self.pair.config
    }

    pub fn params(&self) -> EprParams {
        self.params
    }

    /// The two-particle factor shared by both pairs.
    pub fn pair(&self) -> &LatticeState {
        &self.pair
    }

    /// `Ψ(x₁, x₂, x₃, x₄) = Φ(x₁, x₃) Φ(x₂, x₄)`.
    pub fn amplitude(&self, labels: [i64; 4]) -> C64 {
        self.pair.amplitude(&[labels[0], labels[2]]) * self.pair.amplitude(&[labels[1], labels[3]])
    }

    /// Dense amplitudes indexed by `(x₁, x₂, x₃, x₄)`, particle 1 slowest.
    pub fn densify(&self) -> Result<LatticeState> {
        let config = self.pair.config;
        if config.n_points() > FOUR_PARTICLE_DENSE_CAP {
            return Err(Error::TooLarge { dim: config.dim(4), cap: config.dim(4).min(FOUR_PARTICLE_DENSE_CAP.pow(4)) });
        }
        let amps = (0..config.dim(4))
            .map(|i| {
                let l = config.labels_of(i, 4);
                self.amplitude([l[0], l[1], l[2], l[3]])
            })
            .collect();
        LatticeState::new(config, 4, StateVector::new(amps)?)
    }

    /// Schmidt coefficients across the (1, 2) | (3, 4) cut.
    pub fn schmidt_coefficients(&self) -> Result<Vec<f64>> {
        let dense = self.densify()?;
        let side = self.pair.config.dim(2);
        schmidt_coefficients(dense.amplitudes(), side, side)
    }
}

pub fn build_four_particle_state(config: &LatticeConfig, params: EprParams) -> Result<FourParticleState> {
    Ok(FourParticleState { pair: build_epr_state(config, params)?, params })
}

/// `‖A Ψ − B Ψ‖` for two operators on the same lattice state.
pub fn correlation_gap(state: &LatticeState, a: &Operator, b: &Operator) -> Result<f64> {
    let lhs = a.apply(state.amplitudes())?;
    let rhs = b.apply(state.amplitudes())?;
    Ok(lhs.sub(&rhs)?.norm())
}

/// A uniformly random normalized lattice state, for transform checks.
pub fn random_lattice_state<R: Rng + ?Sized>(config: &LatticeConfig, n_particles: usize, rng: &mut R) -> LatticeState {
    let v = crate::hilbert::random_state(config.dim(n_particles), rng);
    LatticeState::new(*config, n_particles, v).expect("consistent dims")
}
