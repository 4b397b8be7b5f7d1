use nalgebra::DMatrix;
use noncolliding::haar::{
    convolution_density, convolution_gaussian, hc_lhs, hc_rhs, sample_haar_unitary, unitary_average_check, HcQuery,
};
use noncolliding::linalg::{HermitianMatrix, WeylVector, C64};
use noncolliding::rng::StreamKey;
use noncolliding::verify::{ks_one_sample, ks_two_sample};

fn w(v: &[f64]) -> WeylVector {
    WeylVector::strict(v.to_vec()).unwrap()
}

#[test]
fn one_dimensional_phase_is_uniform() {
    let mut rng = StreamKey::new(1).driver(0);
    let angles: Vec<f64> = (0..10_000)
        .map(|_| {
            let u = sample_haar_unitary(1, &mut rng)[(0, 0)];
            assert!((u.norm() - 1.0).abs() < 1e-12);
            u.arg().rem_euclid(std::f64::consts::TAU)
        })
        .collect();
    let r = ks_one_sample(&angles, |a| a / std::f64::consts::TAU);
    assert!(r.p_value > 0.01, "{r:?}");
}

fn eigen_angles(u: &DMatrix<C64>) -> Vec<f64> {
    // eigenvalues of a unitary via its Schur form
    u.clone().schur().eigenvalues().unwrap().iter().map(|z| z.arg()).collect()
}

#[test]
fn law_is_left_invariant() {
    let n = 3;
    let v = sample_haar_unitary(n, &mut StreamKey::new(2).driver(0));
    let mut plain = Vec::new();
    let mut shifted = Vec::new();
    for r in 0..5_000 {
        let u = sample_haar_unitary(n, &mut StreamKey::new(3).replicate(r).driver(0));
        plain.extend(eigen_angles(&u));
        let u2 = sample_haar_unitary(n, &mut StreamKey::new(4).replicate(r).driver(0));
        shifted.extend(eigen_angles(&(&v * u2)));
    }
    let r = ks_two_sample(&plain, &shifted);
    assert!(r.p_value > 0.01, "{r:?}");
}

#[test]
fn hc_symmetric_in_its_arguments() {
    let (x, y) = (w(&[-0.4, 0.3, 1.0]), w(&[0.0, 0.5, 0.8]));
    let a = hc_lhs(&HcQuery::new(x.clone(), y.clone(), 0.9, 50_000).unwrap(), StreamKey::new(5));
    let b = hc_lhs(&HcQuery::new(y.clone(), x.clone(), 0.9, 50_000).unwrap(), StreamKey::new(6));
    assert!(a.agrees_with(&b, 3.0), "{a:?} {b:?}");
    let ra = hc_rhs(&HcQuery::new(x.clone(), y.clone(), 0.9, 1).unwrap());
    let rb = hc_rhs(&HcQuery::new(y, x, 0.9, 1).unwrap());
    assert!((ra - rb).abs() < 1e-13 * ra);
}

#[test]
fn hc_pinned_value_by_monte_carlo() {
    let q = HcQuery::new(w(&[0.0, 1.0]), w(&[0.0, 1.0]), 1.0, 100_000).unwrap();
    let est = hc_lhs(&q, StreamKey::new(7));
    assert!(est.z_score(1.0 - (-1.0f64).exp()).abs() < 3.0, "{est:?}");
}

#[test]
fn hc_sigma_grid() {
    for (n, x, y) in [(2, vec![-0.3, 0.6], vec![0.1, 0.9]), (3, vec![-0.5, 0.1, 0.7], vec![-0.2, 0.3, 1.1])] {
        for sigma in [0.5, 1.0, 2.0] {
            let q = HcQuery::new(w(&x), w(&y), sigma, 50_000).unwrap();
            let est = hc_lhs(&q, StreamKey::new(8).child(n).child((sigma * 10.0) as u64));
            assert!(est.z_score(hc_rhs(&q)).abs() < 3.0, "N={n} σ={sigma}: {est:?} vs {}", hc_rhs(&q));
        }
    }
}

#[test]
fn convolution_spot_check() {
    let h = HermitianMatrix::diagonal(&[0.5, -0.5]);
    let d = convolution_density(2.0, 1.0, &h, 100_000, StreamKey::new(9)).unwrap();
    let q = d.quadrature.unwrap();
    assert!(d.monte_carlo.z_score(q).abs() < 3.0, "{d:?}");
    assert!((q - d.gaussian).abs() < 1e-8 * q);
}

#[test]
fn convolution_mode_is_at_zero() {
    let zero = convolution_gaussian(2.0, 1.0, &HermitianMatrix::zeros(2)).unwrap();
    let norm = 0.6;
    let off = C64::new(norm / 2f64.sqrt(), 0.0) * std::f64::consts::FRAC_1_SQRT_2;
    let candidates = [
        HermitianMatrix::diagonal(&[norm / 2f64.sqrt(), -norm / 2f64.sqrt()]),
        HermitianMatrix::new(DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), off * 2f64.sqrt(), off.conj() * 2f64.sqrt(), C64::new(0.0, 0.0)]))
            .unwrap(),
    ];
    for (k, h) in candidates.iter().enumerate() {
        assert!((h.trace_sq() - norm * norm).abs() < 1e-12);
        let d = convolution_density(2.0, 1.0, h, 50_000, StreamKey::new(10).child(k as u64)).unwrap();
        assert!(d.monte_carlo.mean < zero);
        assert!(d.quadrature.unwrap() < zero);
    }
}

#[test]
fn unitary_average_reproduces_eigen_density() {
    for (t, y) in [(0.5, vec![-0.6, 0.4]), (1.2, vec![-1.0, 0.8])] {
        let r = unitary_average_check(2.0, t, &w(&y), 50_000, StreamKey::new(11)).unwrap();
        assert!(r.average.z_score(r.eigen_density).abs() < 3.0, "t={t}: {r:?}");
    }
}
