use serde::{Deserialize, Serialize};

/// Monte Carlo estimate: sample mean, its standard error, and the sample count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: u64,
}

impl McEstimate {
    /// Estimate from a slice of i.i.d. draws, summed in slice order.
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut acc = Welford::default();
        samples.iter().for_each(|&v| acc.push(v));
        acc.estimate()
    }

    pub fn from_bernoulli(successes: u64, n: u64) -> Self {
        let p = successes as f64 / n as f64;
        Self { mean: p, se: (p * (1.0 - p) / n as f64).sqrt(), n }
    }

    /// |self - value| measured in standard errors. Zero-se estimates compare exactly.
    pub fn z_score(&self, value: f64) -> f64 {
        let diff = self.mean - value;
        if self.se > 0.0 {
            diff / self.se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }

    /// Do two independent estimates agree within `k` joint standard errors?
    pub fn agrees_with(&self, other: &McEstimate, k: f64) -> bool {
        let joint = (self.se * self.se + other.se * other.se).sqrt();
        (self.mean - other.mean).abs() <= k * joint
    }
}

/// Streaming mean/variance.
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, value: f64) {
        self.n += 1;
        let delta = value - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (value - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> McEstimate {
        let se = if self.n < 2 { 0.0 } else { (self.variance() / self.n as f64).sqrt() };
        McEstimate { mean: self.mean, se, n: self.n }
    }
}
