//! One- and two-sample Kolmogorov–Smirnov tests with asymptotic p-values.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// Supremum distance between the empirical CDF(s) and the reference.
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    /// Second sample size; `None` for the one-sample test.
    pub n2: Option<usize>,
    /// Sample size entering the asymptotic distribution.
    pub effective_n: f64,
}

impl KsResult {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

/// P(K > λ) for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series for the CDF converges fast for small λ.
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for k in 1..=20 {
            let m = (2 * k - 1) as f64;
            cdf += (c * m * m).exp();
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sf += if k % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * sf).clamp(0.0, 1.0)
    }
}

/// Asymptotic p-value with Stephens' finite-sample correction.
pub fn ks_p_value(statistic: f64, effective_n: f64) -> f64 {
    let s = effective_n.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * statistic)
}

fn sorted(a: &[f64]) -> Vec<f64> {
    let mut v = a.to_vec();
    v.sort_by(|x, y| x.total_cmp(y));
    v
}

fn two_sample_statistic(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Two-sample KS test; the p-value uses n1 n2/(n1 + n2).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    ks_two_sample_sized(a, b, a.len(), b.len())
}

/// Two-sample KS test whose p-value treats the samples as having sizes
/// `size_a` and `size_b` (used when the draws are not independent, as for
/// pooled coordinates of one vector).
pub fn ks_two_sample_sized(a: &[f64], b: &[f64], size_a: usize, size_b: usize) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty(), "KS test needs non-empty samples");
    let statistic = two_sample_statistic(a, b);
    let (m, n) = (size_a as f64, size_b as f64);
    let effective_n = m * n / (m + n);
    KsResult { statistic, p_value: ks_p_value(statistic, effective_n), n1: a.len(), n2: Some(b.len()), effective_n }
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    ks_one_sample_sized(samples, samples.len(), cdf)
}

pub fn ks_one_sample_sized(samples: &[f64], size: usize, cdf: impl Fn(f64) -> f64) -> KsResult {
    assert!(!samples.is_empty(), "KS test needs a non-empty sample");
    let s = sorted(samples);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x).clamp(0.0, 1.0);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    KsResult { statistic: d, p_value: ks_p_value(d, size as f64), n1: s.len(), n2: None, effective_n: size as f64 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn normal_cdf(x: f64, var: f64) -> f64 {
        0.5 * libm::erfc(-x / (2.0 * var).sqrt())
    }

    #[test]
    fn kolmogorov_tail_values() {
        // branches agree at the switch point and match tabulated quantiles
        let below = kolmogorov_sf(1.18 - 1e-12);
        let above = kolmogorov_sf(1.18);
        assert!((below - above).abs() < 1e-10);
        assert!((kolmogorov_sf(1.3580986) - 0.05).abs() < 1e-6);
        assert!((kolmogorov_sf(1.6276236) - 0.01).abs() < 1e-6);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn trivial_statistics() {
        let a = [0.3, 0.1, 0.7];
        assert_eq!(ks_two_sample(&a, &a).statistic, 0.0);
        assert_eq!(ks_two_sample(&a, &[2.0, 3.0]).statistic, 1.0);
        let r = ks_one_sample(&[0.0; 50], |x| normal_cdf(x, 1.0));
        assert!(r.statistic >= 0.5);
    }

    #[test]
    fn two_sample_p_values_are_calibrated() {
        let trials = 200;
        let bins = 10;
        let mut counts = vec![0usize; bins];
        for r in 0..trials {
            let key = StreamKey::new(71).replicate(r);
            let mut ra = key.driver(0);
            let mut rb = key.driver(1);
            let a: Vec<f64> = (0..10_000).map(|_| ra.gen::<f64>()).collect();
            let b: Vec<f64> = (0..10_000).map(|_| rb.gen::<f64>()).collect();
            let p = ks_two_sample(&a, &b).p_value;
            counts[((p * bins as f64) as usize).min(bins - 1)] += 1;
        }
        let expected = trials as f64 / bins as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
        assert!(p > 0.01, "chi2={chi2} counts={counts:?}");
    }

    #[test]
    fn one_sample_null_and_power() {
        let mut rng = StreamKey::new(72).driver(0);
        let u: Vec<f64> = (0..10_000).map(|_| rng.gen::<f64>()).collect();
        let inv: Vec<f64> = u.iter().map(|&p| -(1.0 - p).ln()).collect();
        assert!(ks_one_sample(&inv, |x| 1.0 - (-x).exp()).p_value > 0.01);
        let g: Vec<f64> = (0..10_000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        assert!(ks_one_sample(&g, |x| normal_cdf(x, 1.0)).p_value > 0.01);
        assert!(ks_one_sample(&g, |x| normal_cdf(x, 4.0)).p_value < 1e-6);
    }

    #[test]
    fn ties_are_handled() {
        let a = [1.0, 1.0, 2.0, 2.0];
        let b = [1.0, 2.0, 2.0, 2.0];
        assert!((ks_two_sample(&a, &b).statistic - 0.25).abs() < 1e-15);
    }
}
