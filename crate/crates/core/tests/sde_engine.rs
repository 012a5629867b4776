use idbm::rng::{run_replicas, Streams};
use idbm::sde::{quadratic_variation_residual, sample_beta, simulate, RecordMode, SdeConfig};
use idbm::stats::{ks_two_sample, mean_se};
use idbm::{Mat, Network, Params};

fn triangle() -> Params {
    Params::without_eta(Network::complete(3, 1.0).unwrap(), vec![1.0; 3]).unwrap()
}

#[test]
fn sampled_potentials_are_admissible() {
    let p = triangle();
    let cfg = SdeConfig { seed: 1, ..SdeConfig::default() };
    for b in sample_beta(&p, 500, &cfg, None).unwrap() {
        assert!(b.is_admissible(p.network()));
    }
}

#[test]
fn worker_count_does_not_change_samples() {
    let p = triangle();
    let cfg = SdeConfig { seed: 5, ..SdeConfig::default() };
    let one = sample_beta(&p, 300, &cfg, Some(1)).unwrap();
    let three = sample_beta(&p, 300, &cfg, Some(3)).unwrap();
    assert_eq!(one, three);
}

#[test]
fn driftless_coordinates_are_supermartingales() {
    let p = triangle();
    let probes = vec![0.1, 0.3, 0.6];
    let cfg = SdeConfig {
        seed: 2,
        probe_times: probes.clone(),
        record: RecordMode::Probes,
        ..SdeConfig::default()
    };
    let recs = run_replicas(Streams::new(cfg.seed), 3000, None, |_, rng| simulate(&p, &cfg, rng).unwrap());
    for &t in &probes {
        for i in 0..3 {
            let xs: Vec<f64> = recs.iter().map(|r| r.x_at(i, t).unwrap()).collect();
            let (m, se) = mean_se(&xs).unwrap();
            assert!(m <= 1.0 + 3.0 * se, "E X_{i}({t}) = {m} ± {se}");
        }
    }
}

#[test]
fn single_coordinate_is_a_drifted_brownian_motion() {
    // With W_00 = 0, X_0 alone is a BM from theta_0 with drift
    // -(eta_0 + sum_j W_0j theta_j), stopped at 0.
    let p = Params::new(Network::complete(2, 1.0).unwrap(), vec![1.0, 0.7], vec![0.3, 0.0]).unwrap();
    let alone = Params::new(Network::new(1, &[vec![0.0]]).unwrap(), vec![1.0], vec![p.effective_drift(0)]).unwrap();
    let t = 0.4;
    let cfg = SdeConfig {
        seed: 8,
        probe_times: vec![t],
        record: RecordMode::Probes,
        ..SdeConfig::default()
    };
    let a = run_replicas(Streams::new(8), 5000, None, |_, rng| simulate(&p, &cfg, rng).unwrap().x_at(0, t).unwrap());
    let b = run_replicas(Streams::new(8).derive(1), 5000, None, |_, rng| {
        simulate(&alone, &cfg, rng).unwrap().x_at(0, t).unwrap()
    });
    let r = ks_two_sample("X_0 vs drifted BM", &a, &b, 0.01).unwrap();
    assert!(r.passed(), "{r:?}");
}

#[test]
fn averaged_quadratic_variation_matches() {
    let p = triangle();
    let at = 0.25;
    let cfg = SdeConfig {
        seed: 4,
        probe_times: vec![at],
        ..SdeConfig::default()
    };
    let reports = run_replicas(Streams::new(cfg.seed), 2000, None, |_, rng| {
        let rec = simulate(&p, &cfg, rng).unwrap();
        quadratic_variation_residual(&rec, &p, at).unwrap()
    });
    for i in 0..3 {
        for j in 0..3 {
            let diff: Vec<f64> = reports.iter().map(|r| r.empirical[(i, j)] - r.expected[(i, j)]).collect();
            let (m, se) = mean_se(&diff).unwrap();
            assert!(m.abs() < 5.0 * se.max(1e-12), "entry ({i},{j}): {m} ± {se}");
        }
    }
    let mean_expected = Mat::from_fn(3, 3, |i, j| reports.iter().map(|r| r.expected[(i, j)]).sum::<f64>() / 2000.0);
    assert!(mean_expected[(0, 0)] > 0.0);
}

#[test]
fn one_vertex_inverse_gaussian_hitting_time() {
    use idbm::stats::{ig_cdf, ks_one_sample};
    let p = Params::new(Network::new(1, &[vec![0.0]]).unwrap(), vec![1.0], vec![1.0]).unwrap();
    let cfg = SdeConfig { seed: 21, ..SdeConfig::default() };
    let t: Vec<f64> = sample_beta(&p, 20_000, &cfg, None)
        .unwrap()
        .iter()
        .map(|b| 0.5 / b.as_slice()[0])
        .collect();
    let r = ks_one_sample("T ~ IG(1,1)", &t, |x| ig_cdf(1.0, 1.0, x).unwrap(), 0.01).unwrap();
    assert!(r.passed(), "{r:?}");
}
