use noncolliding::densities::Ensemble;
use noncolliding::rng::StreamKey;
use noncolliding::sde::{sample_marginals, SdeConfig, SdeModel};
use noncolliding::verify::{ks_one_sample, ks_one_sample_sized, ks_two_sample, MarginalCdfs};

#[test]
fn noncolliding_marginals_match_goe_and_finite_horizon_law() {
    let (n, horizon, reps) = (2, 1.0, 10_000);
    let cfg = SdeConfig::new(n, horizon);
    let m = sample_marginals(SdeModel::Noncolliding, &cfg, horizon, &[0.5 * horizon, horizon], reps, StreamKey::new(31)).unwrap();
    assert!(m.failures * 100 <= reps, "{} failed replicates", m.failures);

    let mid = MarginalCdfs::finite_horizon(n, horizon, 0.5 * horizon).unwrap();
    let goe = MarginalCdfs::ensemble(Ensemble::Goe, n, horizon).unwrap();
    for (k, cdf) in [(0, &mid), (1, &goe)] {
        for i in 0..n {
            let r = ks_one_sample(&m.coordinate(k, i), |x| cdf.coordinates[i].eval(x));
            assert!(r.p_value > 0.01, "time index {k}, coordinate {i}: {r:?}");
        }
        let r = ks_one_sample_sized(&m.pooled(k), m.states[k].len(), |x| cdf.pooled.eval(x));
        assert!(r.p_value > 0.01, "time index {k}, pooled: {r:?}");
    }
}

#[test]
fn long_horizon_approaches_dyson() {
    let (n, t_end, reps) = (2, 1.0, 4_000);
    let mut far = SdeConfig::new(n, 1e3 * t_end);
    far.dt = t_end / 512.0;
    let dyson = SdeConfig::new(n, t_end).with_steps(512);
    let a = sample_marginals(SdeModel::Noncolliding, &far, t_end, &[t_end], reps, StreamKey::new(32)).unwrap();
    let b = sample_marginals(SdeModel::Dyson, &dyson, t_end, &[t_end], reps, StreamKey::new(33)).unwrap();
    for i in 0..n {
        let r = ks_two_sample(&a.coordinate(0, i), &b.coordinate(0, i));
        assert!(r.p_value > 0.01, "coordinate {i}: {r:?}");
    }
}
