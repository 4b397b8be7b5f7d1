//! Marginal CDFs of joint chamber densities, for one-sample KS tests.

use rayon::prelude::*;

use crate::densities::{eigen_density, g_n_t, quadrature_box, Ensemble, MAX_QUADRATURE_N};
use crate::error::{Error, Result};
use crate::linalg::WeylVector;
use crate::quadrature::{ChamberQuadrature, GaussLegendre};

const NODES_PER_INTERVAL: usize = 6;

/// Piecewise cubic Hermite interpolant of a CDF tabulated with its density.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalCdf {
    knots: Vec<f64>,
    cdf: Vec<f64>,
    density: Vec<f64>,
    /// Integral of the tabulated density before normalization.
    pub mass: f64,
}

impl MarginalCdf {
    fn build(knots: Vec<f64>, knot_density: Vec<f64>, interval_mass: Vec<f64>) -> Self {
        let mut cdf = Vec::with_capacity(knots.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for m in &interval_mass {
            acc += m;
            cdf.push(acc);
        }
        let mass = acc;
        cdf.iter_mut().for_each(|c| *c /= mass);
        let density = knot_density.into_iter().map(|d| d / mass).collect();
        Self { knots, cdf, density, mass }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0] {
            return 0.0;
        }
        if x >= k[k.len() - 1] {
            return 1.0;
        }
        let j = k.partition_point(|&v| v <= x) - 1;
        let h = k[j + 1] - k[j];
        let s = (x - k[j]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * self.cdf[j]
            + (s3 - 2.0 * s2 + s) * h * self.density[j]
            + (-2.0 * s3 + 3.0 * s2) * self.cdf[j + 1]
            + (s3 - s2) * h * self.density[j + 1];
        v.clamp(0.0, 1.0)
    }
}

/// CDFs of every coordinate of a chamber density and of the pooled
/// coordinate (the average of the coordinate marginals).
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalCdfs {
    pub coordinates: Vec<MarginalCdf>,
    pub pooled: MarginalCdf,
}

impl MarginalCdfs {
    pub fn from_joint(
        n: usize,
        lo: f64,
        hi: f64,
        intervals: usize,
        quad: &ChamberQuadrature,
        joint: impl Fn(&[f64]) -> f64 + Sync,
    ) -> Result<Self> {
        if n == 0 || n > MAX_QUADRATURE_N {
            return Err(Error::QuadratureDimension(n, MAX_QUADRATURE_N));
        }
        if !(hi > lo) || intervals == 0 {
            return Err(Error::Invalid("marginal CDF needs lo < hi and at least one interval".into()));
        }
        let width = (hi - lo) / intervals as f64;
        let knots: Vec<f64> = (0..=intervals).map(|k| lo + k as f64 * width).collect();
        let rule = GaussLegendre::new(NODES_PER_INTERVAL);
        let marginals = |c: f64| -> Vec<f64> { (0..n).map(|i| quad.marginal_fixed(n, i, c, lo, hi, &joint)).collect() };

        let knot_values: Vec<Vec<f64>> = knots.par_iter().map(|&c| marginals(c)).collect();
        let interval_values: Vec<Vec<f64>> = (0..intervals)
            .into_par_iter()
            .map(|k| {
                let mut mass = vec![0.0; n];
                let mid = knots[k] + 0.5 * width;
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    for (m, d) in mass.iter_mut().zip(marginals(mid + 0.5 * width * x)) {
                        *m += 0.5 * width * w * d;
                    }
                }
                mass
            })
            .collect();

        let coordinates = (0..n)
            .map(|i| {
                MarginalCdf::build(
                    knots.clone(),
                    knot_values.iter().map(|v| v[i]).collect(),
                    interval_values.iter().map(|v| v[i]).collect(),
                )
            })
            .collect();
        let avg = |v: &Vec<f64>| v.iter().sum::<f64>() / n as f64;
        let pooled = MarginalCdf::build(knots.clone(), knot_values.iter().map(avg).collect(), interval_values.iter().map(avg).collect());
        Ok(Self { coordinates, pooled })
    }

    /// Eigenvalue marginals of GUE(t) or GOE(t).
    pub fn ensemble(kind: Ensemble, n: usize, t: f64) -> Result<Self> {
        let (lo, hi) = quadrature_box(&[0.0], t);
        eigen_density(kind, &WeylVector::zeros(n), t)?;
        Self::from_joint(n, lo, hi, 80, &ChamberQuadrature::default(), |y| {
            WeylVector::new(y.to_vec()).and_then(|y| eigen_density(kind, &y, t)).map_or(0.0, |d| d.value)
        })
    }

    /// Marginals of the finite-horizon system started at the origin, at time t.
    pub fn finite_horizon(n: usize, horizon: f64, t: f64) -> Result<Self> {
        let (lo, hi) = quadrature_box(&[0.0], t);
        let origin = WeylVector::zeros(n);
        g_n_t(horizon, 0.0, &origin, t, &origin)?;
        Self::from_joint(n, lo, hi, 80, &ChamberQuadrature::default(), |y| {
            WeylVector::new(y.to_vec()).and_then(|y| g_n_t(horizon, 0.0, &origin, t, &y)).map_or(0.0, |d| d.value)
        })
    }
}
