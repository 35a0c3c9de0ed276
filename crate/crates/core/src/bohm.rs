//! Pilot-wave trajectories for superpositions of free Gaussian packets
//! (ħ = m = 1).
//!
//! A packet with boost `k` is
//! `Ψ_k(x, t) = (1+it)^{-1/2} π^{-1/4} exp(ikx − ik²t/2 − (x−kt)²/(2(1+it)))`,
//! and a model is a finite sum `Σ c_j Ψ_{k_j}`. Velocities are
//! `Im(∂ₓΨ / Ψ)`, evaluated in the log domain so that far-separated packets
//! never underflow.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::C64;
use crate::measure::SeededRng;
use crate::stats::{ks_test, mean_variance, normal_cdf, variance_sigma, KsResult, TabulatedCdf};

/// Relative size below which `|Ψ|` counts as a node, measured against the
/// largest single term of the superposition.
pub const NODE_FLOOR: f64 = 1e-12;
/// Number of times a step may be halved near a node.
pub const MAX_HALVINGS: u32 = 20;
/// `|x₀ + y₀|` or `|x₀|` below this is treated as the symmetric case.
pub const DEGENERACY_FLOOR: f64 = 1e-9;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Packet {
    pub k: f64,
    pub coefficient: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianPacketModel {
    packets: Vec<Packet>,
    #[serde(skip)]
    log_coefficients: Vec<C64>,
}

impl GaussianPacketModel {
    /// Zero coefficients are dropped.
    pub fn new(packets: Vec<Packet>) -> Result<Self> {
        let packets: Vec<Packet> = packets.into_iter().filter(|p| p.coefficient != C64::new(0.0, 0.0)).collect();
        if packets.is_empty() {
            return Err(Error::InvalidParameter("model needs a nonzero packet".into()));
        }
        if packets.iter().any(|p| !p.k.is_finite() || !p.coefficient.re.is_finite() || !p.coefficient.im.is_finite()) {
            return Err(Error::InvalidParameter("packet parameters must be finite".into()));
        }
        let log_coefficients = packets.iter().map(|p| p.coefficient.ln()).collect();
        Ok(Self { packets, log_coefficients })
    }

    /// The unboosted packet.
    pub fn single() -> Self {
        Self::boosted(0.0)
    }

    pub fn boosted(k: f64) -> Self {
        Self::new(vec![Packet { k, coefficient: C64::new(1.0, 0.0) }]).expect("valid packet")
    }

    /// `Ψ_{+k} + Ψ_{−k}`.
    pub fn symmetric(k: f64) -> Self {
        let one = C64::new(1.0, 0.0);
        Self::new(vec![Packet { k, coefficient: one }, Packet { k: -k, coefficient: one }]).expect("valid packets")
    }

    /// The x-particle state left after finding the y-particle of the
    /// entangled pair at `y`: coefficients `Ψ_{±k}(y, 0)`.
    pub fn collapsed(k: f64, y: f64) -> Self {
        let base = (-0.5 * y * y).exp() * PI.powf(-0.25);
        Self::new(vec![
            Packet { k, coefficient: C64::from_polar(base, k * y) },
            Packet { k: -k, coefficient: C64::from_polar(base, -k * y) },
        ])
        .expect("valid packets")
    }

    pub fn packets(&self) -> &[Packet] {
        &self.packets
    }

    /// The boost of a one-packet model.
    pub fn single_boost(&self) -> Option<f64> {
        (self.packets.len() == 1).then(|| self.packets[0].k)
    }

    pub fn psi(&self, x: f64, t: f64) -> C64 {
        let s = C64::new(1.0, t);
        let prefactor = s.sqrt().inv() * PI.powf(-0.25);
        self.packets.iter().map(|p| p.coefficient * (packet_exponent(p.k, x, t, s)).exp()).sum::<C64>() * prefactor
    }

    pub fn dpsi_dx(&self, x: f64, t: f64) -> C64 {
        let s = C64::new(1.0, t);
        let prefactor = s.sqrt().inv() * PI.powf(-0.25);
        self.packets
            .iter()
            .map(|p| p.coefficient * packet_exponent(p.k, x, t, s).exp() * packet_gradient(p.k, x, t, s))
            .sum::<C64>()
            * prefactor
    }

    /// `‖Ψ‖²`, constant in time.
    pub fn norm_sqr(&self) -> f64 {
        let mut total = C64::new(0.0, 0.0);
        for a in &self.packets {
            for b in &self.packets {
                let dk = b.k - a.k;
                total += a.coefficient.conj() * b.coefficient * (-dk * dk / 4.0).exp();
            }
        }
        total.re
    }

    /// Normalized `|Ψ(x, t)|²`.
    pub fn density(&self, x: f64, t: f64) -> f64 {
        self.psi(x, t).norm_sqr() / self.norm_sqr()
    }

    /// Draws from `|Ψ(x, 0)|²`: exactly for one packet, otherwise by
    /// rejection under the `N(0, ½)` envelope.
    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let envelope = Normal::new(0.0, FRAC_1_SQRT_2).expect("valid normal");
        if self.packets.len() == 1 {
            return envelope.sample(rng);
        }
        let bound: f64 = self.packets.iter().map(|p| p.coefficient.norm()).sum::<f64>().powi(2);
        loop {
            let x: f64 = envelope.sample(rng);
            let weight: C64 = self.packets.iter().map(|p| p.coefficient * C64::from_polar(1.0, p.k * x)).sum();
            if rng.random::<f64>() * bound < weight.norm_sqr() {
                return x;
            }
        }
    }
}

// Exponent of a packet without the common (1+it)^{-1/2} π^{-1/4} factor.
fn packet_exponent(k: f64, x: f64, t: f64, s: C64) -> C64 {
    let u = x - k * t;
    I * (k * x - 0.5 * k * k * t) - u * u / (2.0 * s)
}

// ∂ₓ log Ψ_k.
fn packet_gradient(k: f64, x: f64, t: f64, s: C64) -> C64 {
    I * k - (x - k * t) / s
}

/// `Im(∂ₓΨ / Ψ)`, or `NearNode` where `|Ψ|` falls below [`NODE_FLOOR`]
/// relative to its largest term.
pub fn velocity_field(model: &GaussianPacketModel, x: f64, t: f64) -> Result<f64> {
    if let Some(k) = model.single_boost() {
        return Ok(k + (x - k * t) * t / (1.0 + t * t));
    }
    let s = C64::new(1.0, t);
    let mut peak = f64::NEG_INFINITY;
    let mut stack = [C64::new(0.0, 0.0); 8];
    let mut heap = Vec::new();
    let exps: &mut [C64] = if model.packets.len() <= stack.len() {
        &mut stack[..model.packets.len()]
    } else {
        heap.resize(model.packets.len(), C64::new(0.0, 0.0));
        &mut heap
    };
    for ((e, p), lc) in exps.iter_mut().zip(&model.packets).zip(&model.log_coefficients) {
        *e = lc + packet_exponent(p.k, x, t, s);
        peak = peak.max(e.re);
    }
    let mut sum = C64::new(0.0, 0.0);
    let mut grad = C64::new(0.0, 0.0);
    for (e, p) in exps.iter().zip(&model.packets) {
        let w = (e - peak).exp();
        sum += w;
        grad += w * packet_gradient(p.k, x, t, s);
    }
    if sum.norm() < NODE_FLOOR {
        return Err(Error::NearNode { x, t });
    }
    Ok((grad / sum).im)
}

fn rk4<const N: usize>(f: &impl Fn(f64, [f64; N]) -> Result<[f64; N]>, t: f64, x: [f64; N], h: f64) -> Result<[f64; N]> {
    let shift = |x: [f64; N], k: [f64; N], c: f64| std::array::from_fn(|i| x[i] + c * k[i]);
    let k1 = f(t, x)?;
    let k2 = f(t + 0.5 * h, shift(x, k1, 0.5 * h))?;
    let k3 = f(t + 0.5 * h, shift(x, k2, 0.5 * h))?;
    let k4 = f(t + h, shift(x, k3, h))?;
    Ok(std::array::from_fn(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
}

fn guarded_step<const N: usize>(
    f: &impl Fn(f64, [f64; N]) -> Result<[f64; N]>,
    t: f64,
    x: [f64; N],
    h: f64,
    level: u32,
) -> Result<[f64; N]> {
    match rk4(f, t, x, h) {
        Err(Error::NearNode { .. }) if level < MAX_HALVINGS => {
            let mid = guarded_step(f, t, x, 0.5 * h, level + 1)?;
            guarded_step(f, t + 0.5 * h, mid, 0.5 * h, level + 1)
        }
        Err(Error::NearNode { .. }) => Err(Error::StepUnderflow { t }),
        other => other,
    }
}

// Fixed-step RK4 from t = 0 to t_end; the observer sees every step,
// including the initial point.
fn integrate<const N: usize>(
    f: impl Fn(f64, [f64; N]) -> Result<[f64; N]>,
    x0: [f64; N],
    t_end: f64,
    dt: f64,
    mut observe: impl FnMut(f64, [f64; N]),
) -> Result<[f64; N]> {
    if !(dt > 0.0) || !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!("dt = {dt}, t_end = {t_end}")));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("initial position must be finite".into()));
    }
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut x = x0;
    observe(0.0, x);
    for i in 0..steps {
        let t = i as f64 * dt;
        let next = if i + 1 == steps { t_end } else { (i + 1) as f64 * dt };
        x = guarded_step(&f, t, x, next - t, 0)?;
        observe(next, x);
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub dt: f64,
    pub method: &'static str,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("nonempty trajectory")
    }

    pub fn final_position(&self) -> f64 {
        *self.positions.last().expect("nonempty trajectory")
    }

    /// Columns `t,x`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x\n");
        for (t, x) in self.times.iter().zip(&self.positions) {
            writeln!(out, "{t},{x}").expect("writing to a string");
        }
        out
    }
}

pub fn integrate_trajectory(model: &GaussianPacketModel, x0: f64, t_end: f64, dt: f64) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut positions = Vec::new();
    integrate(
        |t, [x]| Ok([velocity_field(model, x, t)?]),
        [x0],
        t_end,
        dt,
        |t, [x]| {
            times.push(t);
            positions.push(x);
        },
    )?;
    Ok(Trajectory { times, positions, dt, method: "rk4" })
}

/// Position at `t_end` without storing the path.
pub fn integrate_endpoint(model: &GaussianPacketModel, x0: f64, t_end: f64, dt: f64) -> Result<f64> {
    let [x] = integrate(|t, [x]| Ok([velocity_field(model, x, t)?]), [x0], t_end, dt, |_, _| {})?;
    Ok(x)
}

/// `X(T)/T` at the final time of the trajectory.
pub fn asymptotic_momentum(traj: &Trajectory, horizon: f64) -> Result<f64> {
    let t = traj.final_time();
    if t < horizon - 1e-12 || t <= 0.0 {
        return Err(Error::HorizonTooShort { final_time: t, horizon });
    }
    Ok(traj.final_position() / t)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentumReport {
    pub seed: SeededRng,
    pub trials: usize,
    pub horizon: f64,
    pub dt: f64,
    pub ks: KsResult,
    pub mean: f64,
    pub variance: f64,
    /// Standard error of the variance under the target.
    pub variance_sigma: f64,
    pub max_initial_speed: f64,
}

/// Asymptotic momenta of the unboosted packet, tested against
/// `π^{-1/2} e^{-p²}`.
pub fn momentum_statistics(trials: usize, horizon: f64, dt: f64, rng: SeededRng) -> Result<MomentumReport> {
    if trials < 2 {
        return Err(Error::InvalidParameter("need at least two trials".into()));
    }
    let model = GaussianPacketModel::single();
    let runs: Vec<(f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut g = rng.for_trial(i).generator();
            let x0 = model.sample_initial(&mut g);
            let v0 = velocity_field(&model, x0, 0.0)?;
            Ok((integrate_endpoint(&model, x0, horizon, dt)? / horizon, v0.abs()))
        })
        .collect::<Result<_>>()?;
    let momenta: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let (mean, variance) = mean_variance(&momenta);
    Ok(MomentumReport {
        seed: rng,
        trials,
        horizon,
        dt,
        ks: ks_test(&momenta, normal_cdf(0.0, 0.5)),
        mean,
        variance,
        variance_sigma: variance_sigma(0.5, trials),
        max_initial_speed: runs.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivarianceReport {
    pub seed: SeededRng,
    pub t: f64,
    pub trials: usize,
    pub ks: KsResult,
    pub mean: f64,
    pub variance: f64,
    /// `(1+t²)/2` for a single packet.
    pub expected_variance: Option<f64>,
    /// Fraction of positions with `x > 0`.
    pub right_mass: f64,
}

/// Transports `|Ψ₀|²` samples to time `t` and tests them against `|Ψ_t|²`.
pub fn equivariance_test(model: &GaussianPacketModel, t: f64, trials: usize, dt: f64, rng: SeededRng) -> Result<EquivarianceReport> {
    if trials < 2 {
        return Err(Error::InvalidParameter("need at least two trials".into()));
    }
    let positions: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut g = rng.for_trial(i).generator();
            let x0 = model.sample_initial(&mut g);
            integrate_endpoint(model, x0, t, dt)
        })
        .collect::<Result<_>>()?;
    let (mean, variance) = mean_variance(&positions);
    let right_mass = positions.iter().filter(|&&x| x > 0.0).count() as f64 / trials as f64;
    let (ks, expected_variance) = match model.single_boost() {
        Some(k) => {
            let var = (1.0 + t * t) / 2.0;
            (ks_test(&positions, normal_cdf(k * t, var)), Some(var))
        }
        None => {
            let width = ((1.0 + t * t) / 2.0).sqrt();
            let lo = model.packets.iter().map(|p| p.k * t).fold(f64::INFINITY, f64::min) - 12.0 * width;
            let hi = model.packets.iter().map(|p| p.k * t).fold(f64::NEG_INFINITY, f64::max) + 12.0 * width;
            let table = TabulatedCdf::new(|x| model.density(x, t), lo, hi, 200_000);
            (ks_test(&positions, |x| table.cdf(x)), None)
        }
    };
    Ok(EquivarianceReport { seed: rng, t, trials, ks, mean, variance, expected_variance, right_mass })
}

pub fn wz_transform(x: f64, y: f64) -> (f64, f64) {
    ((x + y) * FRAC_1_SQRT_2, (x - y) * FRAC_1_SQRT_2)
}

pub fn wz_inverse(w: f64, z: f64) -> (f64, f64) {
    ((w + z) * FRAC_1_SQRT_2, (w - z) * FRAC_1_SQRT_2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContextualityParams {
    pub k: f64,
    pub horizon: f64,
    pub dt: f64,
    pub trials: usize,
    pub seed: SeededRng,
}

impl Default for ContextualityParams {
    fn default() -> Self {
        Self { k: 10.0, horizon: 50.0, dt: 1e-3, trials: 1000, seed: SeededRng::new(0) }
    }
}

impl ContextualityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(Error::InvalidParameter(format!("k must be positive, got {}", self.k)));
        }
        if !(self.horizon > 1.0) {
            return Err(Error::InvalidParameter(format!("horizon must exceed 1, got {}", self.horizon)));
        }
        let max_dt = 0.01 * 1f64.min(1.0 / self.k);
        if !(self.dt > 0.0) || self.dt > max_dt * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("dt must lie in (0, {max_dt}], got {}", self.dt)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Experiment1Outcome {
    /// `X(T)/T`.
    pub result: f64,
    pub w_final: f64,
    pub z_final: f64,
    /// Whether `W(t)` kept the sign of `W(0)` at every step.
    pub w_sign_constant: bool,
}

/// Momentum measurement on the x-particle alone: `w` follows the symmetric
/// pair with boost `√2 k`, `z` the unboosted packet.
pub fn experiment1(params: &ContextualityParams, x0: f64, y0: f64) -> Result<Experiment1Outcome> {
    params.validate()?;
    if (x0 + y0).abs() < DEGENERACY_FLOOR {
        return Err(Error::DegenerateInitial(format!("x0 + y0 = {}", x0 + y0)));
    }
    let (w0, z0) = wz_transform(x0, y0);
    let w_model = GaussianPacketModel::symmetric(SQRT_2 * params.k);
    let mut w_sign_constant = true;
    let [w_final] = integrate(
        |t, [w]| Ok([velocity_field(&w_model, w, t)?]),
        [w0],
        params.horizon,
        params.dt,
        |_, [w]| w_sign_constant &= w.signum() == w0.signum(),
    )?;
    let z_final = integrate_endpoint(&GaussianPacketModel::single(), z0, params.horizon, params.dt)?;
    let (x_final, _) = wz_inverse(w_final, z_final);
    Ok(Experiment1Outcome { result: x_final / params.horizon, w_final, z_final, w_sign_constant })
}

/// Position of the y-particle first, then momentum of the x-particle in the
/// collapsed state. Returns `X(T)/T`.
pub fn experiment2(params: &ContextualityParams, x0: f64, y0: f64) -> Result<f64> {
    params.validate()?;
    if x0.abs() < DEGENERACY_FLOOR {
        return Err(Error::DegenerateInitial(format!("x0 = {x0}")));
    }
    let model = GaussianPacketModel::collapsed(params.k, y0);
    Ok(integrate_endpoint(&model, x0, params.horizon, params.dt)? / params.horizon)
}

/// The point `X_m` splitting the collapsed `|Ψ(x, 0)|²` into equal halves.
pub fn collapsed_median(k: f64, y0: f64) -> f64 {
    let model = GaussianPacketModel::collapsed(k, y0);
    let table = TabulatedCdf::new(|x| model.density(x, 0.0), -8.0, 8.0, 32_000);
    table.quantile(0.5)
}

/// Draws `(x₀, y₀)` from `|Ψ(x, y, 0)|² = 4A² π^{-1} e^{-(x²+y²)} cos²(k(x+y))`
/// under a standard normal envelope per axis.
pub fn sample_entangled_pair<R: Rng + ?Sized>(k: f64, rng: &mut R) -> (f64, f64) {
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    loop {
        let x: f64 = normal.sample(rng);
        let y: f64 = normal.sample(rng);
        let accept = (-(x * x + y * y) / 2.0).exp() * (k * (x + y)).cos().powi(2);
        if rng.random::<f64>() < accept {
            return (x, y);
        }
    }
}

/// The normalized pair density, `A² = 1 / (2(1 + e^{-2k²}))`.
pub fn entangled_pair_density(k: f64, x: f64, y: f64) -> f64 {
    let a2 = 1.0 / (2.0 * (1.0 + (-2.0 * k * k).exp()));
    4.0 * a2 / PI * (-(x * x + y * y)).exp() * (k * (x + y)).cos().powi(2)
}

/// Probability under the pair density that `sgn(x+y) ≠ sgn(x)`, by midpoint
/// quadrature on `[-7, 7]²`.
pub fn disagreement_oracle(k: f64) -> f64 {
    let n = 2800;
    let step = 14.0 / n as f64;
    let mut mass = 0.0;
    for i in 0..n {
        let x = -7.0 + (i as f64 + 0.5) * step;
        for j in 0..n {
            let y = -7.0 + (j as f64 + 0.5) * step;
            if (x + y).signum() != x.signum() {
                mass += entangled_pair_density(k, x, y);
            }
        }
    }
    mass * step * step
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContextualityReport {
    pub params: ContextualityParams,
    pub trials: usize,
    pub experiment1_admissible: usize,
    /// Fraction of admissible trials with `sgn(result) = sgn(x₀ + y₀)`.
    pub experiment1_agreement: f64,
    /// Fraction of admissible trials with `|result| ∈ [0.9k, 1.1k]`.
    pub experiment1_magnitude_rate: f64,
    pub w_sign_constant_rate: f64,
    /// Trials with `|x₀| ≥ π/(2k)`, outside the band that can hold `X_m`.
    pub experiment2_admissible: usize,
    pub experiment2_agreement: f64,
    pub experiment2_agreement_raw: f64,
    /// Fraction of trials with `sgn(result) = sgn(x₀ − X_m)`.
    pub experiment2_median_agreement: f64,
    /// Fraction of trials where the two experiments give opposite signs.
    pub disagreement_fraction: f64,
    /// Fraction of samples with `sgn(x₀ + y₀) ≠ sgn(x₀)`.
    pub predicted_disagreement: f64,
    pub failures: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContextualitySample {
    pub x0: f64,
    pub y0: f64,
    pub experiment1: Option<f64>,
    pub w_sign_constant: bool,
    pub experiment2: Option<f64>,
    pub median: f64,
}

pub fn contextuality_samples(params: &ContextualityParams) -> Result<Vec<ContextualitySample>> {
    params.validate()?;
    Ok((0..params.trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut g = params.seed.for_trial(i).generator();
            let (x0, y0) = sample_entangled_pair(params.k, &mut g);
            let first = experiment1(params, x0, y0).ok();
            ContextualitySample {
                x0,
                y0,
                experiment1: first.map(|o| o.result),
                w_sign_constant: first.is_some_and(|o| o.w_sign_constant),
                experiment2: experiment2(params, x0, y0).ok(),
                median: collapsed_median(params.k, y0),
            }
        })
        .collect())
}

pub fn contextuality_report(params: &ContextualityParams) -> Result<ContextualityReport> {
    let samples = contextuality_samples(params)?;
    let n = samples.len();
    let rate = |hits: usize, total: usize| if total == 0 { 0.0 } else { hits as f64 / total as f64 };
    let sign_eq = |a: f64, b: f64| a.signum() == b.signum();

    let e1: Vec<(&ContextualitySample, f64)> = samples.iter().filter_map(|s| s.experiment1.map(|r| (s, r))).collect();
    let e1_hits = e1.iter().filter(|(s, r)| sign_eq(*r, s.x0 + s.y0)).count();
    let e1_mag = e1.iter().filter(|(_, r)| (0.9 * params.k..=1.1 * params.k).contains(&r.abs())).count();
    let w_const = samples.iter().filter(|s| s.w_sign_constant).count();

    let band = PI / (2.0 * params.k);
    let e2: Vec<(&ContextualitySample, f64)> = samples.iter().filter_map(|s| s.experiment2.map(|r| (s, r))).collect();
    let e2_adm: Vec<_> = e2.iter().filter(|(s, _)| s.x0.abs() >= band).collect();
    let e2_hits = e2_adm.iter().filter(|(s, r)| sign_eq(*r, s.x0)).count();
    let e2_raw = e2.iter().filter(|(s, r)| sign_eq(*r, s.x0)).count();
    let e2_median = e2.iter().filter(|(s, r)| sign_eq(*r, s.x0 - s.median)).count();

    let disagree = samples
        .iter()
        .filter(|s| matches!((s.experiment1, s.experiment2), (Some(a), Some(b)) if !sign_eq(a, b)))
        .count();
    let predicted = samples.iter().filter(|s| !sign_eq(s.x0 + s.y0, s.x0)).count();
    let failures = samples.iter().filter(|s| s.experiment1.is_none() || s.experiment2.is_none()).count();

    Ok(ContextualityReport {
        params: *params,
        trials: n,
        experiment1_admissible: e1.len(),
        experiment1_agreement: rate(e1_hits, e1.len()),
        experiment1_magnitude_rate: rate(e1_mag, e1.len()),
        w_sign_constant_rate: rate(w_const, n),
        experiment2_admissible: e2_adm.len(),
        experiment2_agreement: rate(e2_hits, e2_adm.len()),
        experiment2_agreement_raw: rate(e2_raw, n),
        experiment2_median_agreement: rate(e2_median, n),
        disagreement_fraction: rate(disagree, n),
        predicted_disagreement: rate(predicted, n),
        failures,
    })
}

/// A sum of product packets `Σ c_j Ψ_{kx_j}(x) Ψ_{ky_j}(y)` for two particles.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoParticleModel {
    terms: Vec<(C64, f64, f64)>,
}

impl TwoParticleModel {
    /// `A[Ψ_{+k}(x)Ψ_{+k}(y) + Ψ_{−k}(x)Ψ_{−k}(y)]`.
    pub fn entangled_pair(k: f64) -> Self {
        let a = (1.0 / (2.0 * (1.0 + (-2.0 * k * k).exp()))).sqrt();
        Self { terms: vec![(C64::new(a, 0.0), k, k), (C64::new(a, 0.0), -k, -k)] }
    }

    pub fn psi(&self, x: f64, y: f64, t: f64) -> C64 {
        let s = C64::new(1.0, t);
        let prefactor = 1.0 / (s * PI.sqrt());
        self.terms
            .iter()
            .map(|&(c, kx, ky)| c * (packet_exponent(kx, x, t, s) + packet_exponent(ky, y, t, s)).exp())
            .sum::<C64>()
            * prefactor
    }

    /// `(Im ∂ₓΨ/Ψ, Im ∂_yΨ/Ψ)`.
    pub fn velocity(&self, x: f64, y: f64, t: f64) -> Result<[f64; 2]> {
        let s = C64::new(1.0, t);
        let exps: Vec<C64> = self
            .terms
            .iter()
            .map(|&(c, kx, ky)| c.ln() + packet_exponent(kx, x, t, s) + packet_exponent(ky, y, t, s))
            .collect();
        let peak = exps.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
        let mut sum = C64::new(0.0, 0.0);
        let mut gx = C64::new(0.0, 0.0);
        let mut gy = C64::new(0.0, 0.0);
        for (e, &(_, kx, ky)) in exps.iter().zip(&self.terms) {
            let w = (e - peak).exp();
            sum += w;
            gx += w * packet_gradient(kx, x, t, s);
            gy += w * packet_gradient(ky, y, t, s);
        }
        if sum.norm() < NODE_FLOOR {
            return Err(Error::NearNode { x, t });
        }
        Ok([(gx / sum).im, (gy / sum).im])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairTrajectory {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub dt: f64,
}

impl PairTrajectory {
    /// Columns `t,x,y,w,z`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,w,z\n");
        for ((t, x), y) in self.times.iter().zip(&self.xs).zip(&self.ys) {
            let (w, z) = wz_transform(*x, *y);
            writeln!(out, "{t},{x},{y},{w},{z}").expect("writing to a string");
        }
        out
    }
}

/// Integrates `(X, Y)` directly under the two-particle velocity field.
pub fn integrate_pair(model: &TwoParticleModel, x0: f64, y0: f64, t_end: f64, dt: f64) -> Result<PairTrajectory> {
    let (mut times, mut xs, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    integrate(|t, [x, y]| model.velocity(x, y, t), [x0, y0], t_end, dt, |t, [x, y]| {
        times.push(t);
        xs.push(x);
        ys.push(y);
    })?;
    Ok(PairTrajectory { times, xs, ys, dt })
}

/// The same pair integrated through the separate `w` and `z` motions.
pub fn integrate_pair_factorized(k: f64, x0: f64, y0: f64, t_end: f64, dt: f64) -> Result<PairTrajectory> {
    let (w0, z0) = wz_transform(x0, y0);
    let w = integrate_trajectory(&GaussianPacketModel::symmetric(SQRT_2 * k), w0, t_end, dt)?;
    let z = integrate_trajectory(&GaussianPacketModel::single(), z0, t_end, dt)?;
    let (xs, ys) = w.positions.iter().zip(&z.positions).map(|(&w, &z)| wz_inverse(w, z)).unzip();
    Ok(PairTrajectory { times: w.times, xs, ys, dt })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoCrossingReport {
    pub seed: SeededRng,
    pub pairs: usize,
    pub crossings: usize,
    /// Smallest `x_b(t) − x_a(t)` seen over all pairs and steps.
    pub min_gap: f64,
}

/// Integrates pairs of `|Ψ₀|²`-sampled starting points and counts any step
/// at which their order flips (beyond 1e-9).
pub fn no_crossing_check(model: &GaussianPacketModel, pairs: usize, t_end: f64, dt: f64, rng: SeededRng) -> Result<NoCrossingReport> {
    let gaps: Vec<(bool, f64)> = (0..pairs as u64)
        .into_par_iter()
        .map(|i| {
            let mut g = rng.for_trial(i).generator();
            let (mut a, mut b) = (model.sample_initial(&mut g), model.sample_initial(&mut g));
            while a == b {
                b = model.sample_initial(&mut g);
            }
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            let ta = integrate_trajectory(model, a, t_end, dt)?;
            let tb = integrate_trajectory(model, b, t_end, dt)?;
            let min_gap = ta.positions.iter().zip(&tb.positions).map(|(xa, xb)| xb - xa).fold(f64::INFINITY, f64::min);
            Ok((min_gap < -1e-9, min_gap))
        })
        .collect::<Result<_>>()?;
    Ok(NoCrossingReport {
        seed: rng,
        pairs,
        crossings: gaps.iter().filter(|g| g.0).count(),
        min_gap: gaps.iter().map(|g| g.1).fold(f64::INFINITY, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn velocity_examples() {
        let single = GaussianPacketModel::single();
        assert!((velocity_field(&single, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(velocity_field(&single, 2.3, 0.0).unwrap(), 0.0);
        let boosted = GaussianPacketModel::boosted(3.0);
        for x in [-1.0, 0.0, 2.0] {
            assert!((velocity_field(&boosted, x, 0.0).unwrap() - 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_matches_general_route() {
        // a second packet with a negligible coefficient forces the general path
        let k = 1.7;
        let model = GaussianPacketModel::new(vec![
            Packet { k, coefficient: C64::new(1.0, 0.0) },
            Packet { k: 0.0, coefficient: C64::new(1e-300, 0.0) },
        ])
        .unwrap();
        let single = GaussianPacketModel::boosted(k);
        for (x, t) in [(0.3, 0.0), (-1.2, 2.5), (4.0, 3.0)] {
            let a = velocity_field(&model, x, t).unwrap();
            let b = velocity_field(&single, x, t).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} {b}");
            let ratio = single.dpsi_dx(x, t) / single.psi(x, t);
            assert!((ratio.im - b).abs() < 1e-12);
        }
    }

    #[test]
    fn initial_values_match_plane_wave_form() {
        let model = GaussianPacketModel::collapsed(2.0, 0.4);
        for x in [-1.5f64, 0.0, 0.8] {
            let direct: C64 = model
                .packets()
                .iter()
                .map(|p| p.coefficient * PI.powf(-0.25) * (-x * x / 2.0).exp() * C64::from_polar(1.0, p.k * x))
                .sum();
            assert!((model.psi(x, 0.0) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn packets_solve_free_schrodinger() {
        let h = 1e-3;
        for k in [0.0, 1.0, 2.0] {
            let m = GaussianPacketModel::boosted(k);
            for (x, t) in [(0.2, 0.5), (-0.7, 1.3), (1.1, 2.0)] {
                let dt = (m.psi(x, t + h) - m.psi(x, t - h)) / (2.0 * h);
                let dxx = (m.psi(x + h, t) - 2.0 * m.psi(x, t) + m.psi(x - h, t)) / (h * h);
                assert!((I * dt + 0.5 * dxx).norm() < 1e-5, "k={k}");
            }
        }
    }

    #[test]
    fn norms() {
        assert!((GaussianPacketModel::single().norm_sqr() - 1.0).abs() < 1e-15);
        let s = GaussianPacketModel::symmetric(1.0);
        assert!((s.norm_sqr() - 2.0 * (1.0 + (-1.0f64).exp())).abs() < 1e-12);
        let total: f64 = (-4000..4000).map(|i| s.density(i as f64 * 0.005, 1.5) * 0.005).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn trajectory_oracle() {
        let single = GaussianPacketModel::single();
        let t = integrate_trajectory(&single, 1.0, 3f64.sqrt(), 0.01).unwrap();
        assert!((t.final_position() - 2.0).abs() < 1e-6);
        let z = integrate_trajectory(&single, 0.0, 10.0, 0.01).unwrap();
        assert!(z.positions.iter().all(|&x| x == 0.0));
        let e = integrate_endpoint(&single, -1.3, 10.0, 0.01).unwrap();
        assert!((e / (-1.3 * 101f64.sqrt()) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn asymptotic_momentum_examples() {
        let single = GaussianPacketModel::single();
        let t = integrate_trajectory(&single, 1.0, 100.0, 0.01).unwrap();
        assert!((asymptotic_momentum(&t, 100.0).unwrap() - 10001f64.sqrt() / 100.0).abs() < 1e-6);
        assert!(matches!(asymptotic_momentum(&t, 200.0), Err(Error::HorizonTooShort { .. })));
        let b = integrate_trajectory(&GaussianPacketModel::boosted(5.0), 0.5, 100.0, 0.01).unwrap();
        // Galilean shift: X(t) = kt + X(0)√(1+t²)
        let expected = 5.0 + 0.5 * 10001f64.sqrt() / 100.0;
        assert!((asymptotic_momentum(&b, 100.0).unwrap() - expected).abs() < 1e-6);
    }

    #[test]
    fn node_triggers_halving_then_underflow() {
        // Ψ_{+k} − Ψ_{−k} vanishes identically at x = 0
        let model = GaussianPacketModel::new(vec![
            Packet { k: 1.0, coefficient: C64::new(1.0, 0.0) },
            Packet { k: -1.0, coefficient: C64::new(-1.0, 0.0) },
        ])
        .unwrap();
        assert!(matches!(velocity_field(&model, 0.0, 0.5), Err(Error::NearNode { .. })));
        assert!(matches!(integrate_endpoint(&model, 0.0, 1.0, 0.1), Err(Error::StepUnderflow { .. })));
    }

    #[test]
    fn symmetric_velocity_is_odd() {
        let m = GaussianPacketModel::symmetric(SQRT_2 * 3.0);
        for t in [0.0, 0.4, 2.0, 7.0] {
            for w in [0.1, 0.77, 1.9, 3.3] {
                let (a, b) = (velocity_field(&m, w, t).unwrap(), velocity_field(&m, -w, t).unwrap());
                assert!((a + b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn wz_examples() {
        let (w, z) = wz_transform(1.0, 1.0);
        assert!((w - SQRT_2).abs() < 1e-15 && z == 0.0);
        let (w, z) = wz_transform(1.0, -1.0);
        assert!(w == 0.0 && (z - SQRT_2).abs() < 1e-15);
        let (x, y) = wz_inverse(w, z);
        assert!((x - 1.0).abs() < 1e-15 && (y + 1.0).abs() < 1e-15);
    }

    #[test]
    fn params_validation() {
        assert!(ContextualityParams::default().validate().is_ok());
        let bad = ContextualityParams { dt: 0.01, ..Default::default() };
        assert!(bad.validate().is_err());
        let neg = ContextualityParams { k: -1.0, ..Default::default() };
        assert!(neg.validate().is_err());
    }

    #[test]
    fn experiment_examples() {
        let p = ContextualityParams::default();
        let r = experiment1(&p, 1.0, 2.0).unwrap();
        assert!(r.result > 9.0 && r.result < 11.0, "{}", r.result);
        assert!(r.w_sign_constant);
        assert!(experiment1(&p, -2.0, 1.0).unwrap().result < 0.0);
        assert!(matches!(experiment1(&p, 1.0, -1.0), Err(Error::DegenerateInitial(_))));
        let e = experiment2(&p, 1.0, -2.0).unwrap();
        assert!(e > 9.0 && e < 11.0, "{e}");
        assert!(experiment2(&p, -1.0, -2.0).unwrap() < 0.0);
        assert!(experiment1(&p, -1.0, 2.0).unwrap().result > 0.0);
        assert!(experiment2(&p, -1.0, 2.0).unwrap() < 0.0);
    }

    #[test]
    fn median_lies_in_band() {
        for y in [-1.3, 0.0, 0.2, 0.9] {
            let m = collapsed_median(10.0, y);
            assert!(m.abs() < PI / 20.0, "y={y} m={m}");
        }
        assert!(collapsed_median(10.0, 0.0).abs() < 1e-6);
    }

    #[test]
    fn csv_shape() {
        let t = integrate_trajectory(&GaussianPacketModel::single(), 1.0, 0.05, 0.01).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("t,x\n"));
        assert_eq!(csv.lines().count(), 7);
    }
}
