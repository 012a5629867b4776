use idbm::bessel::{bridge_cdf, bridge_density, sample_bridge, sample_mixture, BridgeParams};
use idbm::rng::{run_replicas, Streams};
use idbm::sde::SdeConfig;
use idbm::stats::{ks_one_sample, mean_se};
use idbm::{Network, Params};
use quadrature::double_exponential::integrate;

/// Integral of `f` over `[0, inf)` for a density concentrated around `m`
/// with spread `s`, split at the bulk so the quadrature sees no sharp peak.
fn integrate_bulk(f: impl Fn(f64) -> f64, m: f64, s: f64) -> f64 {
    let mut cuts = vec![0.0, (m - 8.0 * s).max(0.0), m, m + 8.0 * s, m + 60.0 * s + 1.0];
    cuts.dedup();
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| integrate(&f, w[0], w[1], 1e-13).integral)
        .sum()
}

fn cases() -> Vec<(f64, f64, f64)> {
    // (theta, T, t/T) including very short and very long times.
    vec![
        (1.0, 1.0, 0.5),
        (0.3, 5.0, 0.01),
        (2.5, 0.2, 0.9),
        (1.7, 40.0, 0.3),
        (0.05, 0.001, 0.6),
        (4.0, 2.0, 0.999),
    ]
}

#[test]
fn density_integrates_to_one() {
    for (theta, big_t, frac) in cases() {
        let p = BridgeParams::new(theta, big_t).unwrap();
        let t = frac * big_t;
        let m = theta * (1.0 - frac);
        let s = (t * (1.0 - frac)).sqrt();
        let mass = integrate_bulk(|y| bridge_density(&p, t, y).unwrap(), m, s);
        assert!((mass - 1.0).abs() < 1e-8, "theta={theta} T={big_t} t={t}: {mass}");
    }
}

#[test]
fn closed_form_cdf_matches_quadrature() {
    for (theta, big_t, frac) in cases() {
        let p = BridgeParams::new(theta, big_t).unwrap();
        let t = frac * big_t;
        let m = theta * (1.0 - frac);
        let s = (t * (1.0 - frac)).sqrt();
        for q in [0.3, 1.0, 2.0] {
            let y = m + (q - 1.0) * 2.0 * s + 0.5 * s;
            let y = y.max(1e-3 * s);
            let mut cuts = vec![0.0, (m - 8.0 * s).clamp(0.0, y), m.min(y), (m + 8.0 * s).min(y), y];
            cuts.dedup();
            let by_quad: f64 = cuts
                .windows(2)
                .filter(|w| w[1] > w[0])
                .map(|w| integrate(|z| bridge_density(&p, t, z).unwrap(), w[0], w[1], 1e-13).integral)
                .sum();
            let closed = bridge_cdf(&p, t, y).unwrap();
            assert!((by_quad - closed).abs() < 1e-7, "theta={theta} T={big_t} t={t} y={y}: {by_quad} vs {closed}");
        }
    }
}

#[test]
fn sampler_marginal_matches_kernel() {
    let p = BridgeParams::new(1.2, 2.0).unwrap();
    let grid = [0.0, 0.4, 1.0, 2.0];
    let draws = run_replicas(Streams::new(17), 20_000, None, |_, rng| sample_bridge(&p, &grid, rng).unwrap().norms());
    for (k, &t) in grid.iter().enumerate().skip(1).take(2) {
        let xs: Vec<f64> = draws.iter().map(|d| d[k]).collect();
        let r = ks_one_sample(format!("bridge at {t}"), &xs, |y| bridge_cdf(&p, t, y).unwrap(), 0.01).unwrap();
        assert!(r.passed(), "{r:?}");
        let (mean, se) = mean_se(&xs).unwrap();
        let m = p.theta * (p.t_end - t) / p.t_end;
        let s = (t * (p.t_end - t) / p.t_end).sqrt();
        let exact = integrate_bulk(|y| y * bridge_density(&p, t, y).unwrap(), m, s);
        assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} ± {se}");
    }
}

#[test]
fn one_vertex_mixture_is_stopped_brownian_motion() {
    // A BM from 1 stopped at 0 has an atom 2 Phi(-1/sqrt t) at 0 and, by
    // reflection, density phi_t(y - 1) - phi_t(y + 1) on (0, inf).
    let p = Params::new(Network::new(1, &[vec![0.0]]).unwrap(), vec![1.0], vec![0.0]).unwrap();
    let t = 0.5;
    let cfg = SdeConfig { seed: 3, ..SdeConfig::default() };
    let bundles = sample_mixture(&p, 20_000, &[vec![0.0, t]], &cfg, None).unwrap();
    let xs: Vec<f64> = bundles.iter().map(|b| b.paths[0][1]).collect();
    let sd = t.sqrt();
    let phi = idbm::stats::normal_cdf;
    let atom = 2.0 * phi(-1.0 / sd);
    let cdf = |y: f64| atom + phi((y - 1.0) / sd) - phi(-1.0 / sd) - (phi((y + 1.0) / sd) - phi(1.0 / sd));
    // The atom at 0 is compared separately; KS runs on the positive part.
    let zeros = xs.iter().filter(|&&x| x == 0.0).count() as f64 / xs.len() as f64;
    let se = (atom * (1.0 - atom) / xs.len() as f64).sqrt();
    assert!((zeros - atom).abs() < 4.0 * se, "atom {zeros} vs {atom}");
    let positive: Vec<f64> = xs.iter().copied().filter(|&x| x > 0.0).collect();
    let r = ks_one_sample("positive part", &positive, |y| (cdf(y) - atom) / (1.0 - atom), 0.01).unwrap();
    assert!(r.passed(), "{r:?}");
}
