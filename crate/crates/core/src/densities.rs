//! Transition densities of the absorbed, homogeneous (Dyson) and
//! finite-horizon noncolliding systems, GUE/GOE eigenvalue and matrix
//! densities, and the survival probability N_N(t, x).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use libm::erf;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::estimate::McEstimate;
use crate::linalg::{self, gaussian_kernel, vandermonde, HermitianMatrix, SkewMatrix, SymmetricMatrix, WeylVector};
use crate::quadrature::ChamberQuadrature;
use crate::rng::StreamKey;

/// Largest N for which chamber quadrature is offered.
pub const MAX_QUADRATURE_N: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    Gue,
    Goe,
}

/// What a density value is a density with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DensityDomain {
    /// Lebesgue measure on the Weyl chamber.
    Chamber,
    /// Volume element of the Hermitian or symmetric matrix space.
    MatrixSpace,
    /// A probability, not a density.
    Probability,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityValue {
    pub value: f64,
    pub domain: DensityDomain,
}

impl DensityValue {
    fn chamber(value: f64) -> Self {
        Self { value, domain: DensityDomain::Chamber }
    }
}

/// Normalization constants C1..C4 for a given N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizationConstants {
    pub n: usize,
    /// (2π)^{N/2} ∏_{j=1}^N Γ(j)
    pub c1: f64,
    /// 2^{N/2} ∏_{j=1}^N Γ(j/2)
    pub c2: f64,
    /// 2^{N/2} π^{N²/2}
    pub c3: f64,
    /// 2^{N/2} π^{N(N+1)/4}
    pub c4: f64,
}

impl NormalizationConstants {
    pub fn new(n: usize) -> Self {
        let nf = n as f64;
        let ln_c1 = 0.5 * nf * (2.0 * PI).ln() + (1..=n).map(|j| ln_gamma(j as f64)).sum::<f64>();
        let ln_c2 = 0.5 * nf * 2f64.ln() + (1..=n).map(|j| ln_gamma(j as f64 / 2.0)).sum::<f64>();
        let ln_c3 = 0.5 * nf * 2f64.ln() + 0.5 * nf * nf * PI.ln();
        let ln_c4 = 0.5 * nf * 2f64.ln() + 0.25 * nf * (nf + 1.0) * PI.ln();
        Self { n, c1: ln_c1.exp(), c2: ln_c2.exp(), c3: ln_c3.exp(), c4: ln_c4.exp() }
    }

    /// Jacobian constant of H = U†Λ_y U: 𝒰(dH) = C_U h_N(y)² dU dy.
    pub fn c_unitary(&self) -> f64 {
        self.c3 / self.c1
    }

    /// Jacobian constant of A = VΛ_a Vᵀ: 𝒱(dA) = C_O h_N(a) dV da.
    pub fn c_orthogonal(&self) -> f64 {
        self.c4 / self.c2
    }
}

pub fn constants(n: usize) -> NormalizationConstants {
    NormalizationConstants::new(n)
}

fn check_t(name: &'static str, t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive { name, value: t })
    }
}

fn check_dims(x: &WeylVector, y: &WeylVector) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    Ok(())
}

fn require_strict(x: &WeylVector) -> Result<()> {
    match x.as_slice().windows(2).position(|w| w[0] >= w[1]) {
        Some(index) => Err(Error::NotStrictlyOrdered { index: index + 1 }),
        None => Ok(()),
    }
}

/// Karlin–McGregor density of absorbed Brownian motion in the chamber:
/// f_N(t, y | x) = det[G_t(x_j, y_i)].
pub fn f_n(t: f64, x: &WeylVector, y: &WeylVector) -> Result<DensityValue> {
    check_t("t", t)?;
    check_dims(x, y)?;
    require_strict(x)?;
    Ok(DensityValue::chamber(karlin_mcgregor(t, x.as_slice(), y.as_slice())))
}

pub(crate) fn karlin_mcgregor(t: f64, x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    match n {
        0 => 1.0,
        1 => gaussian_kernel(t, x[0], y[0]),
        _ => {
            let m = DMatrix::from_fn(n, n, |i, j| gaussian_kernel(t, x[j], y[i]));
            m.lu().determinant()
        }
    }
}

/// Ψ(u) = ∫_0^u e^{-v²} dv = (√π/2) erf(u).
pub fn psi(u: f64) -> f64 {
    0.5 * PI.sqrt() * erf(u)
}

/// Skew matrix with entries Ψ((x_j - x_i)/(2√t)), i < j; for odd N it is
/// bordered by a last row/column of Ψ(∞) = √π/2.
pub fn psi_matrix(t: f64, x: &[f64]) -> SkewMatrix {
    let n = x.len();
    let m = n + n % 2;
    let scale = 0.5 / t.sqrt();
    SkewMatrix::from_upper(m, |i, j| if j == n { 0.5 * PI.sqrt() } else { psi((x[j] - x[i]) * scale) })
}

/// Multiplier turning pf(Ψ-matrix) into a probability. Every term of the
/// Pfaffian is a product of M/2 entries, each tending to √π/2 when all gaps
/// are wide, so the constant is (2/√π)^{M/2} with M the (bordered) dimension.
pub fn survival_calibration(n: usize) -> f64 {
    let m = n + n % 2;
    (2.0 / PI.sqrt()).powi((m / 2) as i32)
}

/// Probability that N independent Brownian motions started at strictly
/// ordered x stay ordered up to time t, from the Pfaffian formula.
pub fn survival_pfaffian(t: f64, x: &WeylVector) -> Result<f64> {
    check_t("t", t)?;
    require_strict(x)?;
    Ok(survival_pfaffian_unchecked(t, x.as_slice()))
}

pub(crate) fn survival_pfaffian_unchecked(t: f64, x: &[f64]) -> f64 {
    let n = x.len();
    match n {
        0 | 1 => 1.0,
        2 => erf((x[1] - x[0]) / (2.0 * t.sqrt())),
        _ => {
            let mut a = psi_matrix(t, x).entries().clone();
            survival_calibration(n) * linalg::pfaffian_in_place(&mut a)
        }
    }
}

/// Truncation box used for chamber quadrature: |y_i| <= max|x_i| + 8√t.
pub fn quadrature_box(x: &[f64], t: f64) -> (f64, f64) {
    let xbar = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let l = xbar + 8.0 * t.sqrt();
    (-l, l)
}

/// N_N(t, x) by integrating f_N over the truncated chamber (N <= 4).
pub fn survival_quadrature(t: f64, x: &WeylVector, quad: &ChamberQuadrature) -> Result<f64> {
    check_t("t", t)?;
    require_strict(x)?;
    let n = x.len();
    if n > MAX_QUADRATURE_N {
        return Err(Error::QuadratureDimension(n, MAX_QUADRATURE_N));
    }
    if n <= 1 {
        return Ok(1.0);
    }
    let (lo, hi) = quadrature_box(x.as_slice(), t);
    let xs = x.as_slice();
    Ok(quad.integrate(n, lo, hi, |y| karlin_mcgregor(t, xs, y))?.value)
}

/// No-collision frequency of `paths` simulated N-particle Brownian paths.
///
/// Each path takes `steps` exact Gaussian steps. Between grid points the
/// particles are independent Brownian bridges, whose probability of staying
/// ordered given both endpoints is det[G(x_j, y_i)] / ∏ G(x_i, y_i); a path is
/// killed with the complementary probability, so the estimator has no
/// discrete-monitoring bias.
pub fn survival_montecarlo(t: f64, x: &WeylVector, paths: u64, steps: usize, key: StreamKey) -> Result<McEstimate> {
    check_t("t", t)?;
    require_strict(x)?;
    if paths == 0 || steps == 0 {
        return Err(Error::Invalid("montecarlo survival needs paths >= 1 and steps >= 1".into()));
    }
    let n = x.len();
    let dt = t / steps as f64;
    let sd = dt.sqrt();
    let survived: Vec<bool> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = key.replicate(p).driver(0);
            let mut cur = x.as_slice().to_vec();
            let mut next = vec![0.0; n];
            for _ in 0..steps {
                for (nx, cx) in next.iter_mut().zip(&cur) {
                    *nx = cx + sd * rng.sample::<f64, _>(StandardNormal);
                }
                if next.windows(2).any(|w| w[0] >= w[1]) {
                    return false;
                }
                let ratio = bridge_survival_ratio(dt, &cur, &next);
                if rng.gen::<f64>() >= ratio {
                    return false;
                }
                std::mem::swap(&mut cur, &mut next);
            }
            true
        })
        .collect();
    let successes = survived.iter().filter(|&&s| s).count() as u64;
    Ok(McEstimate::from_bernoulli(successes, paths))
}

fn bridge_survival_ratio(dt: f64, x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 1.0;
    }
    // row i divided by G(x_i, y_i)
    let m = DMatrix::from_fn(n, n, |i, j| {
        let a = y[i] - x[j];
        let b = y[i] - x[i];
        (-(a * a - b * b) / (2.0 * dt)).exp()
    });
    m.lu().determinant().clamp(0.0, 1.0)
}

/// How N_N is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurvivalMethod {
    Pfaffian,
    Quadrature(ChamberQuadrature),
    MonteCarlo { paths: u64, steps: usize, key: StreamKey },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurvivalValue {
    Exact(DensityValue),
    Estimate(McEstimate),
}

impl SurvivalValue {
    pub fn value(&self) -> f64 {
        match self {
            SurvivalValue::Exact(d) => d.value,
            SurvivalValue::Estimate(e) => e.mean,
        }
    }
}

pub fn survival(t: f64, x: &WeylVector, method: &SurvivalMethod) -> Result<SurvivalValue> {
    let exact = |v| SurvivalValue::Exact(DensityValue { value: v, domain: DensityDomain::Probability });
    match method {
        SurvivalMethod::Pfaffian => survival_pfaffian(t, x).map(exact),
        SurvivalMethod::Quadrature(q) => survival_quadrature(t, x, q).map(exact),
        SurvivalMethod::MonteCarlo { paths, steps, key } => {
            survival_montecarlo(t, x, *paths, *steps, *key).map(SurvivalValue::Estimate)
        }
    }
}

/// Transition density of Dyson's model. From the origin at s = 0 this is the
/// GUE eigenvalue density; otherwise the h-transform f_N(t-s, y|x) h(y)/h(x).
pub fn p_n(s: f64, x: &WeylVector, t: f64, y: &WeylVector) -> Result<DensityValue> {
    check_dims(x, y)?;
    if !(s >= 0.0 && t > s) {
        return Err(Error::TimeWindow(format!("need 0 <= s < t, got s={s}, t={t}")));
    }
    if !y.is_strict() {
        return Ok(DensityValue::chamber(0.0));
    }
    let n = y.len();
    if s == 0.0 && x.is_origin() {
        return Ok(DensityValue::chamber(gue_eigen_density(y.as_slice(), t, &constants(n))));
    }
    require_strict(x)?;
    let v = karlin_mcgregor(t - s, x.as_slice(), y.as_slice()) * vandermonde(y.as_slice()) / vandermonde(x.as_slice());
    Ok(DensityValue::chamber(v))
}

/// Transition density of the system conditioned not to collide on (0, T].
pub fn g_n_t(horizon: f64, s: f64, x: &WeylVector, t: f64, y: &WeylVector) -> Result<DensityValue> {
    check_dims(x, y)?;
    check_t("T", horizon)?;
    if t > horizon {
        return Err(Error::TimeWindow(format!("t={t} exceeds the horizon T={horizon}")));
    }
    if !(s >= 0.0 && t > s) {
        return Err(Error::TimeWindow(format!("need 0 <= s < t, got s={s}, t={t}")));
    }
    if !y.is_strict() {
        return Ok(DensityValue::chamber(0.0));
    }
    let ys = y.as_slice();
    let remaining = |y: &[f64]| if t == horizon { 1.0 } else { survival_pfaffian_unchecked(horizon - t, y) };
    if s == 0.0 && x.is_origin() {
        return Ok(DensityValue::chamber(finite_horizon_from_origin(horizon, t, ys, &constants(ys.len()), remaining(ys))));
    }
    require_strict(x)?;
    let v = karlin_mcgregor(t - s, x.as_slice(), ys) * remaining(ys) / survival_pfaffian_unchecked(horizon - s, x.as_slice());
    Ok(DensityValue::chamber(v))
}

fn finite_horizon_from_origin(horizon: f64, t: f64, y: &[f64], c: &NormalizationConstants, survival: f64) -> f64 {
    let n = y.len() as f64;
    let norm_sq: f64 = y.iter().map(|v| v * v).sum();
    let log_pref = 0.25 * n * (n - 1.0) * horizon.ln() - 0.5 * n * n * t.ln() - c.c2.ln() - norm_sq / (2.0 * t);
    log_pref.exp() * vandermonde(y) * survival
}

fn gue_eigen_density(x: &[f64], t: f64, c: &NormalizationConstants) -> f64 {
    let n = x.len() as f64;
    let norm_sq: f64 = x.iter().map(|v| v * v).sum();
    let h = vandermonde(x);
    (-0.5 * n * n * t.ln() - c.c1.ln() - norm_sq / (2.0 * t)).exp() * h * h
}

fn goe_eigen_density(x: &[f64], t: f64, c: &NormalizationConstants) -> f64 {
    let n = x.len() as f64;
    let norm_sq: f64 = x.iter().map(|v| v * v).sum();
    (-0.25 * n * (n + 1.0) * t.ln() - c.c2.ln() - norm_sq / (2.0 * t)).exp() * vandermonde(x)
}

/// Joint eigenvalue density of GUE(t) / GOE(t) on the chamber.
pub fn eigen_density(kind: Ensemble, x: &WeylVector, t: f64) -> Result<DensityValue> {
    check_t("t", t)?;
    if !x.is_strict() {
        return Ok(DensityValue::chamber(0.0));
    }
    let c = constants(x.len());
    let v = match kind {
        Ensemble::Gue => gue_eigen_density(x.as_slice(), t, &c),
        Ensemble::Goe => goe_eigen_density(x.as_slice(), t, &c),
    };
    Ok(DensityValue::chamber(v))
}

/// μ^GUE(H, t) = t^{-N²/2}/C3 exp(-Tr H²/2t).
pub fn gue_matrix_density(h: &HermitianMatrix, t: f64) -> Result<DensityValue> {
    check_t("t", t)?;
    let n = h.dim() as f64;
    let c = constants(h.dim());
    let v = (-0.5 * n * n * t.ln() - c.c3.ln() - h.trace_sq() / (2.0 * t)).exp();
    Ok(DensityValue { value: v, domain: DensityDomain::MatrixSpace })
}

/// μ^GOE(A, t) = t^{-N(N+1)/4}/C4 exp(-Tr A²/2t).
pub fn goe_matrix_density(a: &SymmetricMatrix, t: f64) -> Result<DensityValue> {
    check_t("t", t)?;
    let n = a.dim() as f64;
    let c = constants(a.dim());
    let v = (-0.25 * n * (n + 1.0) * t.ln() - c.c4.ln() - a.trace_sq() / (2.0 * t)).exp();
    Ok(DensityValue { value: v, domain: DensityDomain::MatrixSpace })
}

/// Matrix density for either ensemble; GOE requires a real matrix.
pub fn matrix_density(kind: Ensemble, m: &HermitianMatrix, t: f64) -> Result<DensityValue> {
    match kind {
        Ensemble::Gue => gue_matrix_density(m, t),
        Ensemble::Goe => {
            let a = m
                .to_symmetric()
                .ok_or_else(|| Error::Invalid("GOE density needs a real symmetric matrix".into()))?;
            goe_matrix_density(&a, t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use rand::Rng;

    fn w(v: &[f64]) -> WeylVector {
        WeylVector::new(v.to_vec()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn constants_small_n() {
        let c = constants(2);
        assert!(rel(c.c1, 2.0 * PI) < 1e-14);
        assert!(rel(c.c2, 2.0 * PI.sqrt()) < 1e-14);
        assert!(rel(c.c3, 2.0 * PI * PI) < 1e-14);
        let c1 = constants(1);
        assert!(rel(c1.c1, (2.0 * PI).sqrt()) < 1e-14);
        assert!(rel(c1.c2, (2.0 * PI).sqrt()) < 1e-14);
        assert!(rel(c1.c_orthogonal(), 1.0) < 1e-14);
        assert!(rel(c1.c_unitary(), 1.0) < 1e-14);
        // C4(3) = 2^{3/2} π^3
        assert!(rel(constants(3).c4, 2f64.powf(1.5) * PI.powi(3)) < 1e-13);
    }

    #[test]
    fn karlin_mcgregor_examples() {
        let g = |t, a, b| gaussian_kernel(t, a, b);
        assert_eq!(f_n(0.7, &w(&[0.3]), &w(&[1.1])).unwrap().value, g(0.7, 0.3, 1.1));
        let v = f_n(1.0, &w(&[0.0, 2.0]), &w(&[0.0, 2.0])).unwrap().value;
        assert!((v - 0.156240).abs() < 5e-7, "{v}");
        assert!((v - (g(1.0, 0.0, 0.0).powi(2) - g(1.0, 0.0, 2.0).powi(2))).abs() < 1e-15);
        assert_eq!(f_n(1.0, &w(&[0.0, 2.0]), &w(&[0.5, 0.5])).unwrap().value, 0.0);
        assert!(matches!(f_n(1.0, &w(&[0.0, 0.0]), &w(&[0.0, 1.0])), Err(Error::NotStrictlyOrdered { .. })));
        assert!(matches!(f_n(1.0, &w(&[0.0, 1.0]), &w(&[0.0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn survival_examples() {
        for t in [0.1, 1.0, 7.0] {
            assert_eq!(survival_pfaffian(t, &w(&[3.0])).unwrap(), 1.0);
        }
        let v = survival_pfaffian(1.0, &w(&[0.0, 2.0])).unwrap();
        assert!((v - 0.8427007929497149).abs() < 1e-15);
        // pfaffian of the Ψ matrix with the calibration constant reproduces the 2x2 closed form
        let pf = linalg::pfaffian(&psi_matrix(1.0, &[0.0, 2.0])).unwrap() * survival_calibration(2);
        assert!((pf - v).abs() < 1e-15);
        for n in 2..=6 {
            let x: Vec<f64> = (0..n).map(|i| 1e3 * i as f64).collect();
            assert!((survival_pfaffian(1.0, &w(&x)).unwrap() - 1.0).abs() < 1e-12);
        }
        let q = ChamberQuadrature::default();
        assert!(matches!(
            survival_quadrature(1.0, &w(&[0.0, 1.0, 2.0, 3.0, 4.0]), &q),
            Err(Error::QuadratureDimension(5, 4))
        ));
    }

    #[test]
    fn survival_three_particles_matches_erf_combination() {
        // For N=3 the bordered Pfaffian is erf(a) + erf(b) - erf(a+b) in the gap variables.
        let x = [-0.4, 0.1, 1.3];
        let t: f64 = 0.8;
        let a = (x[1] - x[0]) / (2.0 * t.sqrt());
        let b = (x[2] - x[1]) / (2.0 * t.sqrt());
        let expected = erf(a) + erf(b) - erf(a + b);
        assert!((survival_pfaffian(t, &w(&x)).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn survival_quadrature_closed_form() {
        let q = ChamberQuadrature::default();
        for (t, gap) in [(1.0f64, 2.0f64), (0.5, 0.3), (2.0, 1.0)] {
            let v = survival_quadrature(t, &w(&[0.0, gap]), &q).unwrap();
            assert!((v - erf(gap / (2.0 * f64::sqrt(t)))).abs() < 1e-6, "{t} {gap} {v}");
        }
    }

    #[test]
    fn survival_montecarlo_matches_erf() {
        let e = survival_montecarlo(1.0, &w(&[0.0, 2.0]), 20_000, 8, StreamKey::new(3)).unwrap();
        assert!(e.z_score(0.8427007929497149).abs() < 3.0, "{e:?}");
        assert_eq!(survival_montecarlo(1.0, &w(&[0.5]), 100, 4, StreamKey::new(3)).unwrap().mean, 1.0);
    }

    #[test]
    fn p_n_examples() {
        for (t, y) in [(1.0, 0.3), (2.5, -1.2)] {
            let v = p_n(0.0, &w(&[0.0]), t, &w(&[y])).unwrap().value;
            assert!(rel(v, gaussian_kernel(t, 0.0, y)) < 1e-14);
        }
        let v = p_n(0.0, &WeylVector::zeros(2), 1.0, &w(&[-1.0, 1.0])).unwrap().value;
        let expected = 4.0 * (-1.0f64).exp() / (2.0 * PI);
        assert!(rel(v, expected) < 1e-14);
        assert!((v - 0.2341993261).abs() < 1e-10);
        assert_eq!(p_n(0.0, &WeylVector::zeros(2), 1.0, &w(&[0.5, 0.5])).unwrap().value, 0.0);
        assert!(p_n(1.0, &w(&[0.0, 1.0]), 1.0, &w(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn p_n_matches_gue_eigen_density() {
        let mut rng = StreamKey::new(5).driver(0);
        for n in 1..=4 {
            for _ in 0..10 {
                let x = WeylVector::sorted((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
                let t = rng.gen_range(0.2..3.0);
                let a = p_n(0.0, &WeylVector::zeros(n), t, &x).unwrap().value;
                let b = eigen_density(Ensemble::Gue, &x, t).unwrap().value;
                assert!((a - b).abs() <= 1e-10 * b.max(1e-300));
            }
        }
    }

    #[test]
    fn g_n_t_examples() {
        for horizon in [1.0, 5.0, 100.0] {
            let v = g_n_t(horizon, 0.0, &w(&[0.0]), 0.7, &w(&[0.4])).unwrap().value;
            assert!(rel(v, gaussian_kernel(0.7, 0.0, 0.4)) < 1e-13);
        }
        let mut rng = StreamKey::new(6).driver(0);
        for n in 1..=4 {
            for _ in 0..10 {
                let x = WeylVector::sorted((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
                let t = rng.gen_range(0.2..3.0);
                let a = g_n_t(t, 0.0, &WeylVector::zeros(n), t, &x).unwrap().value;
                let b = eigen_density(Ensemble::Goe, &x, t).unwrap().value;
                assert!((a - b).abs() <= 1e-10 * b.max(1e-300));
            }
        }
        assert!(matches!(g_n_t(1.0, 0.0, &w(&[0.0, 0.0]), 1.5, &w(&[0.0, 1.0])), Err(Error::TimeWindow(_))));
    }

    #[test]
    fn g_n_t_wide_horizon_limit() {
        let y = w(&[-0.6, 0.9]);
        let t = 1.0;
        let ratio = g_n_t(1e3 * t, 0.0, &WeylVector::zeros(2), t, &y).unwrap().value
            / p_n(0.0, &WeylVector::zeros(2), t, &y).unwrap().value;
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn matrix_density_examples() {
        let c = constants(3);
        let t: f64 = 1.7;
        let v = gue_matrix_density(&HermitianMatrix::zeros(3), t).unwrap().value;
        assert!(rel(v, t.powf(-4.5) / c.c3) < 1e-13);
        let mut rng = StreamKey::new(8).driver(0);
        let h = HermitianMatrix::from_upper(3, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let u = crate::haar::sample_haar_unitary(3, &mut rng);
        let a = gue_matrix_density(&h, t).unwrap().value;
        let b = gue_matrix_density(&h.conjugate_by(&u), t).unwrap().value;
        assert!(rel(a, b) < 1e-12);
        let s = SymmetricMatrix::from_upper(3, |_, _| rng.gen_range(-1.0..1.0));
        let o = crate::haar::sample_haar_orthogonal(3, &mut rng);
        let a = goe_matrix_density(&s, t).unwrap().value;
        let b = goe_matrix_density(&s.conjugate_by(&o), t).unwrap().value;
        assert!(rel(a, b) < 1e-12);
        assert!(matrix_density(Ensemble::Goe, &h, t).is_err());
        // N=1: both ensembles are N(0, t)
        let one = HermitianMatrix::diagonal(&[0.8]);
        assert!(rel(matrix_density(Ensemble::Gue, &one, t).unwrap().value, gaussian_kernel(t, 0.0, 0.8)) < 1e-14);
        assert!(rel(matrix_density(Ensemble::Goe, &one, t).unwrap().value, gaussian_kernel(t, 0.0, 0.8)) < 1e-14);
    }

    #[test]
    fn one_particle_eigen_densities_are_gaussian() {
        for kind in [Ensemble::Gue, Ensemble::Goe] {
            let v = eigen_density(kind, &w(&[0.0]), 1.0).unwrap().value;
            assert!((v - 0.3989422804014327).abs() < 1e-15);
        }
    }
}
