//! Haar sampling on U(N)/O(N), the Harish-Chandra unitary integral and the
//! GOE ⊛ GUE convolution density of the finite-horizon matrix process.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::densities::{self, constants, gue_matrix_density};
use crate::error::{Error, Result};
use crate::estimate::McEstimate;
use crate::linalg::{gaussian_kernel, vandermonde, HermitianMatrix, SymmetricMatrix, WeylVector, C64};
use crate::quadrature::{ChamberQuadrature, GaussLegendre};
use crate::rng::{Rng, StreamKey};

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the columns
/// of Q rotated by the phases of diag(R), which makes the factorization unique.
pub fn sample_haar_unitary(n: usize, rng: &mut Rng) -> DMatrix<C64> {
    let z = DMatrix::<C64>::from_fn(n, n, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-distributed orthogonal matrix (sign-corrected QR of a real Ginibre matrix).
pub fn sample_haar_orthogonal(n: usize, rng: &mut Rng) -> DMatrix<f64> {
    let z = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// max |(U†U - I)_ij|.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    let g = u.adjoint() * u;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Inputs of the Harish-Chandra integral.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HcQuery {
    pub x: WeylVector,
    pub y: WeylVector,
    pub sigma: f64,
    pub samples: u64,
}

impl HcQuery {
    pub fn new(x: WeylVector, y: WeylVector, sigma: f64, samples: u64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        for v in [&x, &y] {
            if let Some(index) = v.as_slice().windows(2).position(|w| w[0] >= w[1]) {
                return Err(Error::NotStrictlyOrdered { index: index + 1 });
            }
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::NonPositive { name: "sigma", value: sigma });
        }
        if samples == 0 {
            return Err(Error::Invalid("samples must be at least 1".into()));
        }
        Ok(Self { x, y, sigma, samples })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }
}

/// exp{-Tr(Λ_x - U†Λ_y U)² / 2σ²} for one unitary.
pub fn hc_integrand(x: &[f64], y: &[f64], sigma: f64, u: &DMatrix<C64>) -> f64 {
    let n = x.len();
    let mut tr = 0.0;
    for i in 0..n {
        for j in 0..n {
            // (U†Λ_y U)_ij = Σ_k conj(u_ki) y_k u_kj
            let mut m = C64::new(0.0, 0.0);
            for (k, yk) in y.iter().enumerate() {
                m += u[(k, i)].conj() * u[(k, j)] * *yk;
            }
            if i == j {
                m -= C64::new(x[i], 0.0);
            }
            tr += m.norm_sqr();
        }
    }
    (-tr / (2.0 * sigma * sigma)).exp()
}

/// Monte Carlo average of the integrand over Haar unitaries.
pub fn hc_lhs(q: &HcQuery, key: StreamKey) -> McEstimate {
    let n = q.n();
    let values: Vec<f64> = (0..q.samples)
        .into_par_iter()
        .map(|s| {
            let u = sample_haar_unitary(n, &mut key.replicate(s).driver(0));
            hc_integrand(q.x.as_slice(), q.y.as_slice(), q.sigma, &u)
        })
        .collect();
    McEstimate::from_samples(&values)
}

/// Determinant side: C1(N) σ^{N²} det[G_{σ²}(x_i, y_j)] / (h_N(x) h_N(y)).
pub fn hc_rhs(q: &HcQuery) -> f64 {
    let n = q.n();
    let s2 = q.sigma * q.sigma;
    let (x, y) = (q.x.as_slice(), q.y.as_slice());
    let det = if n == 1 {
        gaussian_kernel(s2, x[0], y[0])
    } else {
        DMatrix::from_fn(n, n, |i, j| gaussian_kernel(s2, x[i], y[j])).lu().determinant()
    };
    let c1 = constants(n).c1;
    c1 * q.sigma.powi((n * n) as i32) * det / (vandermonde(x) * vandermonde(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HcReport {
    pub lhs: McEstimate,
    pub rhs: f64,
    pub z: f64,
}

pub fn verify_hc(q: &HcQuery, key: StreamKey) -> HcReport {
    let lhs = hc_lhs(q, key);
    let rhs = hc_rhs(q);
    HcReport { lhs, rhs, z: lhs.z_score(rhs) }
}

/// Variances of the two independent summands at time t: the GUE part has
/// σ² = t(T-t)/T and the GOE part 1/α = t²/T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvolutionScales {
    pub sigma_sq: f64,
    pub alpha: f64,
}

impl ConvolutionScales {
    pub fn new(horizon: f64, t: f64) -> Result<Self> {
        if !(t > 0.0 && t < horizon) {
            return Err(Error::TimeWindow(format!("need 0 < t < T, got t={t}, T={horizon}")));
        }
        Ok(Self { sigma_sq: t * (horizon - t) / horizon, alpha: horizon / (t * t) })
    }
}

/// Three evaluations of q_N^T(0, O, t, H).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvolutionDensity {
    /// E[μ^GUE(H - A, σ²)] with A ~ GOE(1/α).
    pub monte_carlo: McEstimate,
    /// Eigenvalue-coordinate integral over a ∈ chamber and V ∈ O(N).
    pub quadrature: Option<f64>,
    /// Product of the Gaussian entry densities of Θ1 + Θ2.
    pub gaussian: f64,
}

/// Rule for averaging over O(N) in Euler-angle coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalRule {
    /// Points per angle.
    pub points: usize,
}

impl Default for OrthogonalRule {
    fn default() -> Self {
        Self { points: 48 }
    }
}

impl OrthogonalRule {
    /// Weighted rotation matrices whose weights sum to one. Reflections are
    /// omitted: VΛVᵀ is unchanged when V is multiplied by a diagonal sign matrix.
    pub fn nodes(&self, n: usize) -> Result<Vec<(f64, DMatrix<f64>)>> {
        let k = self.points.max(1);
        match n {
            1 => Ok(vec![(1.0, DMatrix::identity(1, 1))]),
            2 => Ok((0..k)
                .map(|i| {
                    // VΛVᵀ has period π in the rotation angle
                    let th = PI * i as f64 / k as f64;
                    let (s, c) = th.sin_cos();
                    (1.0 / k as f64, DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
                })
                .collect()),
            3 => {
                let gl = GaussLegendre::new(k);
                let mut out = Vec::with_capacity(k * k * k);
                for a in 0..k {
                    let alpha = 2.0 * PI * a as f64 / k as f64;
                    for (cb, wb) in gl.nodes.iter().zip(&gl.weights) {
                        let beta = cb.acos();
                        for g in 0..k {
                            let gamma = 2.0 * PI * g as f64 / k as f64;
                            let v = rot_z(alpha) * rot_y(beta) * rot_z(gamma);
                            out.push((wb / (2.0 * (k * k) as f64), v));
                        }
                    }
                }
                Ok(out)
            }
            _ => Err(Error::QuadratureDimension(n, 3)),
        }
    }
}

fn rot_z(a: f64) -> DMatrix<f64> {
    let (s, c) = a.sin_cos();
    DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0])
}

fn rot_y(b: f64) -> DMatrix<f64> {
    let (s, c) = b.sin_cos();
    DMatrix::from_row_slice(3, 3, &[c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c])
}

/// Closed-form transition density of the finite-horizon matrix process from
/// the zero matrix: independent Gaussian entries with diagonal variance t,
/// off-diagonal real-part variance t/2 and imaginary-part variance σ²/2.
pub fn convolution_gaussian(horizon: f64, t: f64, h: &HermitianMatrix) -> Result<f64> {
    let sc = ConvolutionScales::new(horizon, t)?;
    let n = h.dim();
    let e = h.entries();
    let mut log = 0.0;
    for i in 0..n {
        let d = e[(i, i)].re;
        log += -0.5 * (2.0 * PI * t).ln() - d * d / (2.0 * t);
        for j in i + 1..n {
            let z = e[(i, j)];
            log += -0.5 * (PI * t).ln() - z.re * z.re / t;
            log += -0.5 * (PI * sc.sigma_sq).ln() - z.im * z.im / sc.sigma_sq;
        }
    }
    Ok(log.exp())
}

/// ∫ μ^GOE(A, 1/α) μ^GUE(H - A, σ²) 𝒱(dA) written in eigen-coordinates
/// A = VΛ_aVᵀ and integrated by chamber quadrature in a and a product rule on O(N).
pub fn convolution_quadrature(
    horizon: f64,
    t: f64,
    h: &HermitianMatrix,
    quad: &ChamberQuadrature,
    rule: &OrthogonalRule,
) -> Result<f64> {
    let sc = ConvolutionScales::new(horizon, t)?;
    let n = h.dim();
    let c = constants(n);
    let nodes = rule.nodes(n)?;
    let re = h.entries().map(|z| z.re);
    // d_k(V) = v_kᵀ Re(H) v_k, so Tr(H VΛVᵀ) = Σ_k a_k d_k(V)
    let diag_terms: Vec<(f64, Vec<f64>)> = nodes
        .iter()
        .map(|(w, v)| {
            let m = v.transpose() * &re * v;
            (*w, (0..n).map(|k| m[(k, k)]).collect())
        })
        .collect();
    let s2 = sc.sigma_sq;
    let tr_h2 = h.trace_sq();
    let log_pref = c.c_orthogonal().ln() - (n * n) as f64 * 0.5 * s2.ln() + 0.25 * (n * (n + 1)) as f64 * sc.alpha.ln()
        - c.c3.ln()
        - c.c4.ln();
    let spread = 8.0 * (s2 + 1.0 / sc.alpha).sqrt() + h.norm();
    let value = quad.integrate(n, -spread, spread, |a| {
        let a2: f64 = a.iter().map(|v| v * v).sum();
        let base = -0.5 * sc.alpha * a2 - (tr_h2 + a2) / (2.0 * s2);
        let avg: f64 = diag_terms
            .iter()
            .map(|(w, d)| {
                let cross: f64 = a.iter().zip(d).map(|(ak, dk)| ak * dk).sum();
                w * (base + cross / s2).exp()
            })
            .sum();
        vandermonde(a) * avg
    })?;
    Ok(log_pref.exp() * value.value)
}

fn sample_goe(n: usize, variance: f64, rng: &mut Rng) -> SymmetricMatrix {
    let sd = variance.sqrt();
    let off = sd * std::f64::consts::FRAC_1_SQRT_2;
    SymmetricMatrix::from_upper(n, |i, j| {
        let z: f64 = rng.sample(StandardNormal);
        if i == j {
            sd * z
        } else {
            off * z
        }
    })
}

pub fn convolution_montecarlo(horizon: f64, t: f64, h: &HermitianMatrix, samples: u64, key: StreamKey) -> Result<McEstimate> {
    let sc = ConvolutionScales::new(horizon, t)?;
    let n = h.dim();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let a = sample_goe(n, 1.0 / sc.alpha, &mut key.replicate(s).driver(0));
            let diff = h.sub(&HermitianMatrix::from_real(&a));
            gue_matrix_density(&diff, sc.sigma_sq).map(|d| d.value).unwrap_or(f64::NAN)
        })
        .collect();
    Ok(McEstimate::from_samples(&values))
}

/// All three evaluations; quadrature is attempted for N <= 3.
pub fn convolution_density(horizon: f64, t: f64, h: &HermitianMatrix, samples: u64, key: StreamKey) -> Result<ConvolutionDensity> {
    let monte_carlo = convolution_montecarlo(horizon, t, h, samples, key)?;
    let gaussian = convolution_gaussian(horizon, t, h)?;
    let quadrature = if h.dim() <= 3 {
        let rule = OrthogonalRule { points: if h.dim() == 3 { 10 } else { 48 } };
        Some(convolution_quadrature(horizon, t, h, &ChamberQuadrature::default(), &rule)?)
    } else {
        None
    };
    Ok(ConvolutionDensity { monte_carlo, quadrature, gaussian })
}

/// Unitary average identity linking the matrix process to the eigenvalue
/// density: C_U h_N(y)² ∫ dU q_N^T(0, O, t, U†Λ_y U) against g_N^T(0, 0, t, y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitaryAverageReport {
    pub average: McEstimate,
    pub eigen_density: f64,
}

pub fn unitary_average_check(horizon: f64, t: f64, y: &WeylVector, samples: u64, key: StreamKey) -> Result<UnitaryAverageReport> {
    ConvolutionScales::new(horizon, t)?;
    let n = y.len();
    let c = constants(n);
    let scale = c.c_unitary() * vandermonde(y.as_slice()).powi(2);
    let lambda = HermitianMatrix::diagonal(y.as_slice());
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let u = sample_haar_unitary(n, &mut key.replicate(s).driver(0));
            scale * convolution_gaussian(horizon, t, &lambda.conjugate_by(&u)).unwrap_or(f64::NAN)
        })
        .collect();
    let eigen_density = densities::g_n_t(horizon, 0.0, &WeylVector::zeros(n), t, y)?.value;
    Ok(UnitaryAverageReport { average: McEstimate::from_samples(&values), eigen_density })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[f64]) -> WeylVector {
        WeylVector::strict(v.to_vec()).unwrap()
    }

    #[test]
    fn unitary_samples_are_unitary() {
        let mut rng = StreamKey::new(1).driver(0);
        for n in 1..=6 {
            for _ in 0..20 {
                assert!(unitarity_defect(&sample_haar_unitary(n, &mut rng)) < 1e-10);
            }
        }
        let o = sample_haar_orthogonal(4, &mut rng);
        assert!((o.transpose() * &o - DMatrix::<f64>::identity(4, 4)).amax() < 1e-12);
    }

    #[test]
    fn hc_rhs_pinned_value() {
        let q = HcQuery::new(w(&[0.0, 1.0]), w(&[0.0, 1.0]), 1.0, 1).unwrap();
        assert!((hc_rhs(&q) - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        assert!((hc_rhs(&q) - 0.6321206).abs() < 1e-7);
    }

    #[test]
    fn hc_one_dimensional_is_exact() {
        let q = HcQuery::new(w(&[0.3]), w(&[-1.2]), 0.7, 500).unwrap();
        let expected = (-(1.5f64).powi(2) / (2.0 * 0.49)).exp();
        assert!((hc_rhs(&q) - expected).abs() < 1e-15);
        let e = hc_lhs(&q, StreamKey::new(4));
        assert!((e.mean - expected).abs() < 1e-14);
        assert!(e.se < 1e-15);
    }

    #[test]
    fn hc_rhs_scale_invariance() {
        let q = HcQuery::new(w(&[-0.5, 0.2, 1.0]), w(&[0.0, 0.4, 0.9]), 0.8, 1).unwrap();
        let c = 2.5;
        let scaled = HcQuery::new(
            w(&q.x.as_slice().iter().map(|v| v * c).collect::<Vec<_>>()),
            w(&q.y.as_slice().iter().map(|v| v * c).collect::<Vec<_>>()),
            q.sigma * c,
            1,
        )
        .unwrap();
        assert!((hc_rhs(&q) - hc_rhs(&scaled)).abs() < 1e-12 * hc_rhs(&q));
    }

    #[test]
    fn hc_query_validation() {
        assert!(HcQuery::new(w(&[0.0, 1.0]), w(&[0.0]), 1.0, 1).is_err());
        assert!(HcQuery::new(w(&[0.0, 1.0]), w(&[0.0, 1.0]), 0.0, 1).is_err());
        assert!(HcQuery::new(w(&[0.0, 1.0]), w(&[0.0, 1.0]), 1.0, 0).is_err());
        let tie = WeylVector::new(vec![0.0, 0.0]).unwrap();
        assert!(HcQuery::new(tie, w(&[0.0, 1.0]), 1.0, 1).is_err());
    }

    #[test]
    fn convolution_one_dimensional_is_variance_addition() {
        let (horizon, t) = (2.0, 0.7);
        for hv in [-1.0, 0.0, 0.4] {
            let h = HermitianMatrix::diagonal(&[hv]);
            let g = convolution_gaussian(horizon, t, &h).unwrap();
            let expected = gaussian_kernel(t, 0.0, hv);
            assert!((g - expected).abs() < 1e-12);
            let q = convolution_quadrature(horizon, t, &h, &ChamberQuadrature::default(), &OrthogonalRule::default()).unwrap();
            assert!((q - expected).abs() < 1e-12, "{q} {expected}");
        }
    }

    #[test]
    fn convolution_quadrature_matches_gaussian_form() {
        let h = HermitianMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.5, 0.0), C64::new(0.2, 0.3), C64::new(0.2, -0.3), C64::new(-0.5, 0.0)],
        ))
        .unwrap();
        let q = convolution_quadrature(2.0, 1.0, &h, &ChamberQuadrature::default(), &OrthogonalRule::default()).unwrap();
        let g = convolution_gaussian(2.0, 1.0, &h).unwrap();
        assert!((q - g).abs() < 1e-8 * g, "{q} {g}");
    }

    #[test]
    fn convolution_mode_at_zero() {
        let zero = convolution_gaussian(2.0, 1.0, &HermitianMatrix::zeros(2)).unwrap();
        let other = convolution_gaussian(2.0, 1.0, &HermitianMatrix::diagonal(&[0.5, -0.5])).unwrap();
        assert!(zero > other);
        assert!(ConvolutionScales::new(1.0, 1.0).is_err());
        assert!(ConvolutionScales::new(1.0, 0.0).is_err());
    }
}
