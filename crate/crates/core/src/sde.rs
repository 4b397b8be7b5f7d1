//! Euler–Maruyama integrators for Dyson's Brownian motion and for the
//! noncolliding system on a finite horizon T, whose drift is the gradient of
//! ln N_N(T - t, x).

use std::sync::Arc;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::survival_pfaffian_unchecked;
use crate::error::{Error, Result};
use crate::linalg::{ordered_eigenvalues, WeylVector};
use crate::paths::{build_matrix_process, MatrixKind, TimeGrid};
use crate::rng::{Rng, StreamKey};

const INCREMENT_STREAM: u64 = 0;
const REFINE_STREAM: u64 = 1;
const BOOTSTRAP_TAG: u64 = 0xb007;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StartMode {
    /// Start at x = 0; the state at t = Δt is drawn exactly from the matrix model.
    Origin,
    Interior(WeylVector),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdeModel {
    Dyson,
    Noncolliding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub n: usize,
    pub horizon: f64,
    pub dt: f64,
    pub start: StartMode,
    /// A proposal with any gap below this is rejected.
    pub gap_eps: f64,
    pub max_halvings: u32,
    /// A step is also refined when the drift moves some particle by more than
    /// this fraction of the smallest current gap; at the halving limit such a
    /// step is accepted if it keeps the ordering.
    pub max_drift_fraction: f64,
    /// Finite-difference step for the drift; `None` means 1e-4·(1 + |x|∞).
    pub fd_step: Option<f64>,
}

impl SdeConfig {
    pub fn new(n: usize, horizon: f64) -> Self {
        Self { n, horizon, dt: horizon / 1024.0, start: StartMode::Origin, gap_eps: 1e-8, max_halvings: 20, max_drift_fraction: 0.5, fd_step: None }
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.dt = self.horizon / steps as f64;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Invalid("N must be at least 1".into()));
        }
        for (name, v) in [
            ("horizon", self.horizon),
            ("dt", self.dt),
            ("gap_eps", self.gap_eps),
            ("max_drift_fraction", self.max_drift_fraction),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositive { name, value: v });
            }
        }
        if let Some(h) = self.fd_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::NonPositive { name: "fd_step", value: h });
            }
        }
        if let StartMode::Interior(x) = &self.start {
            if x.len() != self.n {
                return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
            }
            if let Some(index) = (1..x.len()).find(|&i| x[i] - x[i - 1] < self.gap_eps) {
                return Err(Error::NotStrictlyOrdered { index });
            }
        }
        Ok(())
    }
}

/// A discrete path. The first state is the start point (the origin in
/// origin-bootstrap mode); every later state is strictly ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<WeylVector>,
    /// Total step halvings performed by the collision guard.
    pub halvings: u64,
}

/// Σ_{j≠i} 1/(x_i - x_j).
pub fn drift_dyson(x: &[f64], out: &mut [f64]) {
    for i in 0..x.len() {
        out[i] = (0..x.len()).filter(|&j| j != i).map(|j| 1.0 / (x[i] - x[j])).sum();
    }
}

/// ∂/∂x_i ln N_N(T - t, x) by central differences with step `h`.
pub fn drift_bt(t: f64, x: &WeylVector, horizon: f64, h: f64) -> Result<Vec<f64>> {
    if !(t < horizon) {
        return Err(Error::TimeWindow(format!("drift needs t < T, got t={t}, T={horizon}")));
    }
    if !x.is_strict() {
        return Err(Error::NotStrictlyOrdered { index: (1..x.len()).find(|&i| x[i] <= x[i - 1]).unwrap_or(0) });
    }
    if !(h > 0.0) {
        return Err(Error::NonPositive { name: "h", value: h });
    }
    let mut out = vec![0.0; x.len()];
    drift_bt_into(horizon - t, x.as_slice(), h, &mut out)?;
    Ok(out)
}

fn drift_bt_into(tau: f64, x: &[f64], h: f64, out: &mut [f64]) -> Result<()> {
    let n = x.len();
    if n <= 1 {
        out.iter_mut().for_each(|v| *v = 0.0);
        return Ok(());
    }
    let mut y = x.to_vec();
    for i in 0..n {
        let mut room = f64::INFINITY;
        if i > 0 {
            room = room.min(x[i] - x[i - 1]);
        }
        if i + 1 < n {
            room = room.min(x[i + 1] - x[i]);
        }
        let mut hi = h.min(0.25 * room);
        let mut value = None;
        for _ in 0..40 {
            y[i] = x[i] + hi;
            let up = log_survival(tau, &y);
            y[i] = x[i] - hi;
            let down = log_survival(tau, &y);
            y[i] = x[i];
            if up.is_finite() && down.is_finite() {
                value = Some((up - down) / (2.0 * hi));
                break;
            }
            hi *= 0.5;
        }
        out[i] = value.ok_or_else(|| Error::Invalid(format!("survival vanishes near coordinate {i}")))?;
    }
    Ok(())
}

fn log_survival(tau: f64, y: &[f64]) -> f64 {
    if y.len() == 2 {
        let u = (y[1] - y[0]) / (2.0 * tau.sqrt());
        if u > 0.5 {
            return (-libm::erfc(u)).ln_1p();
        }
    }
    let v = survival_pfaffian_unchecked(tau, y);
    if v > 0.0 {
        v.ln()
    } else {
        f64::NAN
    }
}

fn default_fd_step(x: &[f64]) -> f64 {
    1e-4 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

struct Integrator<'a> {
    cfg: &'a SdeConfig,
    model: SdeModel,
    /// Latest time at which the finite-horizon drift is evaluated.
    drift_clock_limit: f64,
    refine: Rng,
    halvings: u64,
    drift: Vec<f64>,
}

impl Integrator<'_> {
    fn drift_at(&mut self, t: f64, x: &[f64]) -> Result<()> {
        match self.model {
            SdeModel::Dyson => {
                drift_dyson(x, &mut self.drift);
                Ok(())
            }
            SdeModel::Noncolliding => {
                let s = t.min(self.drift_clock_limit);
                let h = self.cfg.fd_step.unwrap_or_else(|| default_fd_step(x));
                let mut d = std::mem::take(&mut self.drift);
                let r = drift_bt_into(self.cfg.horizon - s, x, h, &mut d);
                self.drift = d;
                r
            }
        }
    }

    fn acceptable(&self, y: &[f64]) -> bool {
        y.iter().all(|v| v.is_finite()) && y.windows(2).all(|w| w[1] - w[0] >= self.cfg.gap_eps)
    }

    /// One Euler step of length `dt` driven by the Brownian increment `dw`.
    /// A rejected proposal is retried as two half steps whose increments are
    /// drawn from the Brownian bridge conditioned on `dw`.
    fn advance(&mut self, t: f64, x: &mut [f64], dt: f64, dw: &[f64], depth: u32) -> Result<()> {
        let at_limit = depth >= self.cfg.max_halvings;
        if self.drift_at(t, x).is_ok() {
            let gap = x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            let push = self.drift.iter().fold(0.0f64, |m, d| m.max(d.abs())) * dt;
            let resolved = push <= self.cfg.max_drift_fraction * gap;
            let proposal: Vec<f64> = (0..x.len()).map(|i| x[i] + self.drift[i] * dt + dw[i]).collect();
            if (resolved || at_limit) && self.acceptable(&proposal) {
                x.copy_from_slice(&proposal);
                return Ok(());
            }
        }
        if at_limit {
            return Err(Error::ReplicateFailed { time: t, halvings: depth });
        }
        self.halvings += 1;
        let sd = (dt / 4.0).sqrt();
        let first: Vec<f64> = dw
            .iter()
            .map(|&w| {
                let z: f64 = self.refine.sample(StandardNormal);
                0.5 * w + sd * z
            })
            .collect();
        let second: Vec<f64> = dw.iter().zip(&first).map(|(w, a)| w - a).collect();
        self.advance(t, x, dt / 2.0, &first, depth + 1)?;
        self.advance(t + dt / 2.0, x, dt / 2.0, &second, depth + 1)
    }
}

fn bootstrap_state(model: SdeModel, cfg: &SdeConfig, t1: f64, key: StreamKey) -> Result<Vec<f64>> {
    let (kind, horizon) = match model {
        SdeModel::Dyson => (MatrixKind::Gue, t1),
        SdeModel::Noncolliding => (MatrixKind::XiT, cfg.horizon),
    };
    let grid = Arc::new(TimeGrid::new(vec![0.0, t1], horizon)?);
    let mp = build_matrix_process(kind, cfg.n, &grid, key.child(BOOTSTRAP_TAG))?;
    Ok(ordered_eigenvalues(&mp.values[1]).into_vec())
}

fn step_count(cfg: &SdeConfig, t_end: f64) -> usize {
    ((t_end / cfg.dt) - 1e-9).ceil().max(1.0) as usize
}

/// Integrates one replicate on the uniform grid k·t_end/K, K = ⌈t_end/Δt⌉,
/// calling `observe(k, t_k, x_k)` at every grid point. Returns the number of
/// halvings performed.
pub fn integrate(
    model: SdeModel,
    cfg: &SdeConfig,
    t_end: f64,
    key: StreamKey,
    mut observe: impl FnMut(usize, f64, &[f64]),
) -> Result<u64> {
    cfg.validate()?;
    if !(t_end > 0.0) {
        return Err(Error::NonPositive { name: "t_end", value: t_end });
    }
    if model == SdeModel::Noncolliding && t_end > cfg.horizon * (1.0 + 1e-12) {
        return Err(Error::TimeWindow(format!("t_end={t_end} exceeds the horizon {}", cfg.horizon)));
    }
    let steps = step_count(cfg, t_end);
    let dt = t_end / steps as f64;
    let n = cfg.n;
    let mut integ = Integrator {
        cfg,
        model,
        drift_clock_limit: cfg.horizon - dt,
        refine: key.driver(REFINE_STREAM),
        halvings: 0,
        drift: vec![0.0; n],
    };
    let mut increments = key.driver(INCREMENT_STREAM);
    let time = |k: usize| if k == steps { t_end } else { k as f64 * dt };

    let (mut x, first_step) = match &cfg.start {
        StartMode::Interior(x0) => (x0.as_slice().to_vec(), 0),
        StartMode::Origin => {
            observe(0, 0.0, &vec![0.0; n]);
            let x1 = bootstrap_state(model, cfg, dt, key)?;
            if !integ.acceptable(&x1) {
                return Err(Error::ReplicateFailed { time: dt, halvings: 0 });
            }
            (x1, 1)
        }
    };
    observe(first_step, time(first_step), &x);
    let sd = dt.sqrt();
    let mut dw = vec![0.0; n];
    for k in first_step..steps {
        for w in dw.iter_mut() {
            let z: f64 = increments.sample(StandardNormal);
            *w = sd * z;
        }
        integ.advance(time(k), &mut x, dt, &dw, 0)?;
        observe(k + 1, time(k + 1), &x);
    }
    Ok(integ.halvings)
}

fn simulate(model: SdeModel, cfg: &SdeConfig, t_end: f64, key: StreamKey) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let halvings = integrate(model, cfg, t_end, key, |_, t, x| {
        times.push(t);
        states.push(WeylVector::new(x.to_vec()).expect("integrator states are ordered"));
    })?;
    Ok(Trajectory { times, states, halvings })
}

pub fn simulate_dyson(cfg: &SdeConfig, t_end: f64, key: StreamKey) -> Result<Trajectory> {
    simulate(SdeModel::Dyson, cfg, t_end, key)
}

pub fn simulate_noncolliding_t(cfg: &SdeConfig, t_end: f64, key: StreamKey) -> Result<Trajectory> {
    simulate(SdeModel::Noncolliding, cfg, t_end, key)
}

/// States of many replicates at selected grid times.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSamples {
    pub times: Vec<f64>,
    /// `states[k][r]` is replicate r at `times[k]`, over successful replicates only.
    pub states: Vec<Vec<Vec<f64>>>,
    pub failures: u64,
    pub halvings: u64,
}

impl MarginalSamples {
    pub fn coordinate(&self, time_index: usize, i: usize) -> Vec<f64> {
        self.states[time_index].iter().map(|x| x[i]).collect()
    }

    pub fn pooled(&self, time_index: usize) -> Vec<f64> {
        self.states[time_index].iter().flatten().copied().collect()
    }
}

/// Runs `reps` replicates (replicate r uses `key.replicate(r)`) in parallel
/// and records the states at `times`, which must lie on the integration grid.
pub fn sample_marginals(
    model: SdeModel,
    cfg: &SdeConfig,
    t_end: f64,
    times: &[f64],
    reps: u64,
    key: StreamKey,
) -> Result<MarginalSamples> {
    cfg.validate()?;
    let steps = step_count(cfg, t_end);
    let dt = t_end / steps as f64;
    let mut indices = Vec::with_capacity(times.len());
    for &t in times {
        let k = (t / dt).round();
        if !(0.0..=steps as f64).contains(&k) || (k * dt - t).abs() > 1e-9 * t_end.max(1.0) {
            return Err(Error::Grid(format!("observation time {t} is not on the integration grid")));
        }
        indices.push(k as usize);
    }
    let outcomes: Vec<Result<(Vec<Vec<f64>>, u64)>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut snaps = vec![Vec::new(); indices.len()];
            let halvings = integrate(model, cfg, t_end, key.replicate(r), |k, _, x| {
                for (slot, &want) in snaps.iter_mut().zip(&indices) {
                    if want == k {
                        *slot = x.to_vec();
                    }
                }
            })?;
            Ok((snaps, halvings))
        })
        .collect();
    let mut out = MarginalSamples { times: times.to_vec(), states: vec![Vec::new(); times.len()], failures: 0, halvings: 0 };
    for outcome in outcomes {
        match outcome {
            Ok((snaps, h)) => {
                out.halvings += h;
                for (slot, s) in out.states.iter_mut().zip(snaps) {
                    slot.push(s);
                }
            }
            Err(Error::ReplicateFailed { .. }) => out.failures += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
