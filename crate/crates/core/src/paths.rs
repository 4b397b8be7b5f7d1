//! Scalar Brownian motions and bridges on a time grid, and the Hermitian
//! matrix-valued processes built from them.
//!
//! Driver layout: the scalar driver for entry (i, j), i <= j, component `c`
//! (0 = real, 1 = imaginary) reads substream `2 (i N + j) + c` of the
//! replicate's [`StreamKey`].

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ordered_eigenvalues, HermitianMatrix, WeylVector, C64};
use crate::rng::{Rng, StreamKey};

/// Increasing time points starting at 0, contained in [0, horizon].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>, horizon: f64) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Grid("empty grid".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::Grid(format!("grid must start at 0, starts at {}", times[0])));
        }
        if let Some(k) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Grid(format!("grid not strictly increasing at index {}", k + 1)));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::NonPositive { name: "horizon", value: horizon });
        }
        let last = *times.last().unwrap();
        if last > horizon {
            return Err(Error::Grid(format!("grid time {last} lies beyond the horizon {horizon}")));
        }
        Ok(Self { times, horizon })
    }

    /// `steps` equal intervals covering [0, horizon].
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Grid("need at least one step".into()));
        }
        let dt = horizon / steps as f64;
        let mut times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        times[steps] = horizon;
        Self::new(times, horizon)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn mesh(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn ends_at_horizon(&self) -> bool {
        *self.times.last().unwrap() == self.horizon
    }

    /// Index of the grid point equal to `t` (within 1e-12 relative).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * self.horizon.max(1.0);
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarPath {
    pub grid: Arc<TimeGrid>,
    pub values: Vec<f64>,
}

/// Standard Brownian motion from 0 with independent N(0, Δt) increments.
pub fn sample_brownian(grid: &Arc<TimeGrid>, rng: &mut Rng) -> ScalarPath {
    let t = grid.times();
    let mut values = Vec::with_capacity(t.len());
    values.push(0.0);
    for w in t.windows(2) {
        let z: f64 = rng.sample(StandardNormal);
        let prev = *values.last().unwrap();
        values.push(prev + (w[1] - w[0]).sqrt() * z);
    }
    ScalarPath { grid: Arc::clone(grid), values }
}

/// Brownian bridge from 0 at time 0 to `endpoint` at time `horizon`, sampled
/// exactly on the grid by sequential Gaussian conditioning.
pub fn sample_bridge(grid: &Arc<TimeGrid>, horizon: f64, endpoint: f64, rng: &mut Rng) -> Result<ScalarPath> {
    let t = grid.times();
    if let Some(&bad) = t.iter().find(|&&s| s > horizon) {
        return Err(Error::Grid(format!("grid time {bad} lies beyond the bridge horizon {horizon}")));
    }
    let mut values = Vec::with_capacity(t.len());
    values.push(0.0);
    for w in t.windows(2) {
        let (s, u) = (w[0], w[1]);
        let prev = *values.last().unwrap();
        let z: f64 = rng.sample(StandardNormal);
        let next = if u >= horizon {
            endpoint
        } else {
            let remaining = horizon - s;
            let mean = prev + (endpoint - prev) * (u - s) / remaining;
            let var = (u - s) * (horizon - u) / remaining;
            mean + var.sqrt() * z
        };
        values.push(next);
    }
    Ok(ScalarPath { grid: Arc::clone(grid), values })
}

/// One realization of a Hermitian matrix-valued process.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPath {
    pub grid: Arc<TimeGrid>,
    pub values: Vec<HermitianMatrix>,
}

impl MatrixPath {
    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, |h| h.dim())
    }

    pub fn at(&self, t: f64) -> Option<&HermitianMatrix> {
        self.grid.index_of(t).map(|k| &self.values[k])
    }

    pub fn conjugate_by(&self, u: &nalgebra::DMatrix<C64>) -> MatrixPath {
        MatrixPath { grid: Arc::clone(&self.grid), values: self.values.iter().map(|h| h.conjugate_by(u)).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    /// Off-diagonal (B^R + iB^I)/√2, diagonal B^R.
    Gue,
    /// Off-diagonal B^R/√2, diagonal B^R.
    Goe,
    /// Off-diagonal (B^R + iβ)/√2 with β a bridge to 0 at the horizon, diagonal B^R.
    XiT,
}

pub fn driver_index(n: usize, i: usize, j: usize, component: usize) -> u64 {
    (2 * (i * n + j) + component) as u64
}

fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i..n).map(move |j| (i, j)))
}

/// Scalar drivers of one Ξ^T realization, stored by upper-triangular entry.
#[derive(Debug, Clone, PartialEq)]
pub struct XiTDrivers {
    pub n: usize,
    pub grid: Arc<TimeGrid>,
    /// B^R_ij for i <= j in row-major upper-triangular order.
    pub real: Vec<ScalarPath>,
    /// β_ij for i < j in row-major order.
    pub imag: Vec<ScalarPath>,
}

impl XiTDrivers {
    pub fn sample(n: usize, grid: &Arc<TimeGrid>, key: StreamKey) -> Result<Self> {
        let horizon = grid.horizon();
        let mut real = Vec::with_capacity(n * (n + 1) / 2);
        let mut imag = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for (i, j) in upper_pairs(n) {
            real.push(sample_brownian(grid, &mut key.driver(driver_index(n, i, j, 0))));
            if i < j {
                imag.push(sample_bridge(grid, horizon, 0.0, &mut key.driver(driver_index(n, i, j, 1)))?);
            }
        }
        Ok(Self { n, grid: Arc::clone(grid), real, imag })
    }

    /// Ξ^T(t) at every grid time.
    pub fn matrix_path(&self) -> MatrixPath {
        self.assemble(|k, re, im, diag| if diag { C64::new(re.values[k], 0.0) } else { C64::new(re.values[k], im.values[k]) * FRAC_1_SQRT_2 })
    }

    fn assemble(&self, entry: impl Fn(usize, &ScalarPath, &ScalarPath, bool) -> C64) -> MatrixPath {
        let n = self.n;
        let values = (0..self.grid.len())
            .map(|k| {
                let mut m = 0;
                let mut upper = vec![C64::new(0.0, 0.0); n * n];
                for (r, (i, j)) in upper_pairs(n).enumerate() {
                    let re = &self.real[r];
                    if i == j {
                        upper[i * n + j] = entry(k, re, re, true);
                    } else {
                        upper[i * n + j] = entry(k, re, &self.imag[m], false);
                        m += 1;
                    }
                }
                HermitianMatrix::from_upper(n, |i, j| upper[i * n + j])
            })
            .collect();
        MatrixPath { grid: Arc::clone(&self.grid), values }
    }
}

pub fn build_matrix_process(kind: MatrixKind, n: usize, grid: &Arc<TimeGrid>, key: StreamKey) -> Result<MatrixPath> {
    if n == 0 {
        return Err(Error::Invalid("matrix dimension must be at least 1".into()));
    }
    match kind {
        MatrixKind::XiT => Ok(XiTDrivers::sample(n, grid, key)?.matrix_path()),
        MatrixKind::Gue | MatrixKind::Goe => {
            let mut real = Vec::new();
            let mut imag = Vec::new();
            for (i, j) in upper_pairs(n) {
                real.push(sample_brownian(grid, &mut key.driver(driver_index(n, i, j, 0))));
                if i < j && kind == MatrixKind::Gue {
                    imag.push(sample_brownian(grid, &mut key.driver(driver_index(n, i, j, 1))));
                }
            }
            let values = (0..grid.len())
                .map(|k| {
                    let mut m = 0;
                    let mut upper = vec![C64::new(0.0, 0.0); n * n];
                    for (r, (i, j)) in upper_pairs(n).enumerate() {
                        let re = real[r].values[k];
                        upper[i * n + j] = if i == j {
                            C64::new(re, 0.0)
                        } else if kind == MatrixKind::Gue {
                            let im = imag[m].values[k];
                            m += 1;
                            C64::new(re, im) * FRAC_1_SQRT_2
                        } else {
                            C64::new(re * FRAC_1_SQRT_2, 0.0)
                        };
                    }
                    HermitianMatrix::from_upper(n, |i, j| upper[i * n + j])
                })
                .collect();
            Ok(MatrixPath { grid: Arc::clone(grid), values })
        }
    }
}

/// Matrix process whose scalar components are bridges pinned so that the
/// value at the horizon equals `h`: diagonal bridges end at h_ii, off-diagonal
/// real/imaginary bridges end at √2·Re h_ij / √2·Im h_ij before the 1/√2 scaling.
pub fn build_pinned_process(grid: &Arc<TimeGrid>, h: &HermitianMatrix, key: StreamKey) -> Result<MatrixPath> {
    let n = h.dim();
    let horizon = grid.horizon();
    let e = h.entries();
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut paths = Vec::new();
    for (i, j) in upper_pairs(n) {
        if i == j {
            let re = sample_bridge(grid, horizon, e[(i, i)].re, &mut key.driver(driver_index(n, i, j, 0)))?;
            paths.push((re, None));
        } else {
            let re = sample_bridge(grid, horizon, sqrt2 * e[(i, j)].re, &mut key.driver(driver_index(n, i, j, 0)))?;
            let im = sample_bridge(grid, horizon, sqrt2 * e[(i, j)].im, &mut key.driver(driver_index(n, i, j, 1)))?;
            paths.push((re, Some(im)));
        }
    }
    let values = (0..grid.len())
        .map(|k| {
            let mut upper = vec![C64::new(0.0, 0.0); n * n];
            for ((i, j), (re, im)) in upper_pairs(n).zip(&paths) {
                upper[i * n + j] = match im {
                    None => C64::new(re.values[k], 0.0),
                    Some(im) => C64::new(re.values[k], im.values[k]) * FRAC_1_SQRT_2,
                };
            }
            HermitianMatrix::from_upper(n, |i, j| upper[i * n + j])
        })
        .collect();
    Ok(MatrixPath { grid: Arc::clone(grid), values })
}

/// Splits Ξ^T = Θ1 + Θ2, where Θ1 replaces every B^R by its bridge
/// B^R(t) - (t/T) B^R(T) and Θ2 carries the remaining (t/T) B^R(T).
pub fn theta_decomposition(drivers: &XiTDrivers) -> Result<(MatrixPath, MatrixPath)> {
    let grid = &drivers.grid;
    if !grid.ends_at_horizon() {
        return Err(Error::MissingEndpoint(grid.horizon()));
    }
    let horizon = grid.horizon();
    let last = grid.len() - 1;
    let times = grid.times();
    let theta1 = drivers.assemble(|k, re, im, diag| {
        let bridge = re.values[k] - times[k] / horizon * re.values[last];
        if diag {
            C64::new(bridge, 0.0)
        } else {
            C64::new(bridge, im.values[k]) * FRAC_1_SQRT_2
        }
    });
    let theta2 = drivers.assemble(|k, re, _, diag| {
        let drift = times[k] / horizon * re.values[last];
        if diag {
            C64::new(drift, 0.0)
        } else {
            C64::new(drift * FRAC_1_SQRT_2, 0.0)
        }
    });
    Ok((theta1, theta2))
}

/// Ordered eigenvalues at every grid time.
pub fn eigenvalue_path(mp: &MatrixPath) -> Vec<WeylVector> {
    mp.values.iter().map(ordered_eigenvalues).collect()
}
