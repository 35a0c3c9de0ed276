//! One-sample Kolmogorov-Smirnov testing and small moment helpers.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
}

/// Supremum distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Asymptotic p-value of a KS statistic `d` from `n` samples, with the
/// Stephens small-sample correction.
pub fn kolmogorov_p_value(d: f64, n: usize) -> f64 {
    let root = (n as f64).sqrt();
    let lambda = (root + 0.12 + 0.11 / root) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=200 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let statistic = ks_statistic(samples, cdf);
    KsResult { n: samples.len(), statistic, p_value: kolmogorov_p_value(statistic, samples.len()) }
}

/// CDF of a normal distribution with the given mean and variance.
pub fn normal_cdf(mean: f64, variance: f64) -> impl Fn(f64) -> f64 {
    let dist = Normal::new(mean, variance.sqrt()).expect("positive variance");
    move |x| dist.cdf(x)
}

/// Sample mean and unbiased sample variance.
pub fn mean_variance(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Standard error of the sample variance for a normal population.
pub fn variance_sigma(variance: f64, n: usize) -> f64 {
    variance * (2.0 / (n as f64 - 1.0)).sqrt()
}

/// Tabulated CDF on a uniform grid, built by trapezoidal integration of an
/// unnormalized density, with linear interpolation between nodes.
#[derive(Clone, Debug)]
pub struct TabulatedCdf {
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl TabulatedCdf {
    pub fn new(density: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> Self {
        let step = (hi - lo) / intervals as f64;
        let mut values = Vec::with_capacity(intervals + 1);
        let mut acc = 0.0;
        let mut prev = density(lo);
        values.push(0.0);
        for i in 1..=intervals {
            let cur = density(lo + i as f64 * step);
            acc += 0.5 * (prev + cur) * step;
            values.push(acc);
            prev = cur;
        }
        let total = acc;
        for v in &mut values {
            *v /= total;
        }
        Self { lo, step, values }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let s = (x - self.lo) / self.step;
        if s <= 0.0 {
            return 0.0;
        }
        let i = s.floor() as usize;
        if i + 1 >= self.values.len() {
            return 1.0;
        }
        let frac = s - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Smallest grid-interpolated `x` with `cdf(x) = q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let i = self.values.partition_point(|&v| v < q);
        if i == 0 {
            return self.lo;
        }
        if i >= self.values.len() {
            return self.lo + self.step * (self.values.len() - 1) as f64;
        }
        let (a, b) = (self.values[i - 1], self.values[i]);
        let frac = if b > a { (q - a) / (b - a) } else { 0.0 };
        self.lo + self.step * ((i - 1) as f64 + frac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn p_value_limits() {
        assert_eq!(kolmogorov_p_value(0.0, 100), 1.0);
        assert!(kolmogorov_p_value(0.5, 100) < 1e-10);
        // critical value for α = 0.05 is about 1.358 / √n
        let p = kolmogorov_p_value(1.358 / 100.0, 10_000);
        assert!((p - 0.05).abs() < 0.005, "{p}");
    }

    #[test]
    fn normal_samples_pass_and_shifted_fail() {
        let mut g = ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut g)).collect();
        assert!(ks_test(&xs, normal_cdf(0.0, 1.0)).p_value > 0.01);
        assert!(ks_test(&xs, normal_cdf(0.3, 1.0)).p_value < 1e-6);
        let (m, v) = mean_variance(&xs);
        assert!(m.abs() < 0.05 && (v - 1.0).abs() < 3.0 * variance_sigma(1.0, xs.len()));
    }

    #[test]
    fn tabulated_matches_normal() {
        let t = TabulatedCdf::new(|x| (-x * x / 2.0).exp(), -10.0, 10.0, 20_000);
        let n = normal_cdf(0.0, 1.0);
        for x in [-2.0, -0.5, 0.0, 0.7, 1.9] {
            assert!((t.cdf(x) - n(x)).abs() < 1e-6);
        }
        assert!(t.quantile(0.5).abs() < 1e-6);
    }
}
