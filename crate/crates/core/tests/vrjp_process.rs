use idbm::rng::{run_replicas, StreamRng, Streams};
use idbm::sde::{psi_limit, simulate, RecordMode, SdeConfig};
use idbm::stats::{ks_one_sample, ks_two_sample};
use idbm::vrjp::{embed_beta, markov_jump_simulate, mixing_params, psi_from_beta, vrjp_simulate, VrjpRecord};
use idbm::{Beta, Network};
use rand::Rng;
use rand_distr::Exp1;

/// Thinning oracle: while at `i` every rate `W_ij sqrt(theta_j + l_j) /
/// (2 sqrt(theta_i + l_i))` only decreases, so the rate at the last proposal
/// bounds it until the next one.
fn vrjp_by_thinning(net: &Network, theta: &[f64], delta: usize, t_max: f64, rng: &mut StreamRng) -> VrjpRecord {
    let n = net.n();
    let w = net.weights();
    let mut local = vec![0.0; n];
    let mut counts = vec![0u64; n];
    counts[delta] = 1;
    let (mut visited, mut jump_times) = (vec![delta], Vec::new());
    let (mut t, mut at) = (0.0, delta);
    let rate = |at: usize, local: &[f64], j: usize| 0.5 * w[(at, j)] * (theta[j] + local[j]).sqrt() / (theta[at] + local[at]).sqrt();
    loop {
        let bound: f64 = (0..n).map(|j| rate(at, &local, j)).sum();
        let e: f64 = rng.sample(Exp1);
        let s = e / bound;
        if t + s >= t_max {
            local[at] += t_max - t;
            break;
        }
        t += s;
        local[at] += s;
        let total: f64 = (0..n).map(|j| rate(at, &local, j)).sum();
        let u: f64 = rng.random();
        if u * bound < total {
            let mut v = rng.random::<f64>() * total;
            let mut next = at;
            for j in 0..n {
                let r = rate(at, &local, j);
                if r > 0.0 {
                    next = j;
                    if v < r {
                        break;
                    }
                    v -= r;
                }
            }
            at = next;
            counts[at] += 1;
            visited.push(at);
            jump_times.push(t);
        }
    }
    VrjpRecord {
        t_max,
        jump_times,
        visited,
        local_times: local,
        jump_counts: counts,
    }
}

#[test]
fn first_sojourn_matches_closed_form() {
    let net = Network::complete(2, 1.5).unwrap();
    let theta = [0.8, 1.3];
    let first: Vec<f64> = run_replicas(Streams::new(1), 20_000, None, |_, rng| {
        let r = vrjp_simulate(&net, &theta, 0, 300.0, rng).unwrap();
        r.jump_times[0]
    });
    // P(S > s) = exp(-A(sqrt(c + s) - sqrt c)), A = W sqrt(theta_1), c = theta_0.
    let a = 1.5 * theta[1].sqrt();
    let c = theta[0];
    let r = ks_one_sample("first sojourn", &first, |s| 1.0 - (-a * ((c + s).sqrt() - c.sqrt())).exp(), 0.01).unwrap();
    assert!(r.passed(), "{r:?}");
}

#[test]
fn hazard_inversion_agrees_with_thinning() {
    let net = Network::new(3, &[vec![0.0, 1.0, 0.4], vec![1.0, 0.0, 2.0], vec![0.4, 2.0, 0.0]]).unwrap();
    let theta = [1.0, 0.5, 2.0];
    let t_max = 8.0;
    let exact = run_replicas(Streams::new(2), 8000, None, |_, rng| vrjp_simulate(&net, &theta, 0, t_max, rng).unwrap());
    let thin = run_replicas(Streams::new(3), 8000, None, |_, rng| vrjp_by_thinning(&net, &theta, 0, t_max, rng));
    for i in 0..3 {
        let a: Vec<f64> = exact.iter().map(|r| r.local_times[i]).collect();
        let b: Vec<f64> = thin.iter().map(|r| r.local_times[i]).collect();
        let rep = ks_two_sample(format!("l_{i}"), &a, &b, 0.01 / 6.0).unwrap();
        assert!(rep.passed(), "{rep:?}");
        let a: Vec<f64> = exact.iter().map(|r| r.jump_counts[i] as f64).collect();
        let b: Vec<f64> = thin.iter().map(|r| r.jump_counts[i] as f64).collect();
        let rep = ks_two_sample(format!("N_{i}"), &a, &b, 0.01 / 6.0).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }
    assert!(exact.iter().chain(&thin).all(|r| r.invariants_hold(1e-9)));
}

#[test]
fn markov_sojourn_is_exponential() {
    let net = Network::complete(3, 1.0).unwrap();
    let psi = [1.0, 2.0, 0.5];
    let rate = 0.5 * (2.0 + 0.5) / 1.0;
    let first: Vec<f64> = run_replicas(Streams::new(4), 20_000, None, |_, rng| {
        markov_jump_simulate(&net, &psi, 0, 30.0, rng).unwrap().jump_times[0]
    });
    let (m, se) = idbm::stats::mean_se(&first).unwrap();
    assert!((m - 1.0 / rate).abs() < 3.0 * se, "{m} vs {}", 1.0 / rate);
}

#[test]
fn psi_solve_residual_is_small() {
    let net = Network::new(
        4,
        &[
            vec![0.0, 1.0, 0.3, 0.0],
            vec![1.0, 0.0, 0.7, 2.0],
            vec![0.3, 0.7, 0.0, 0.5],
            vec![0.0, 2.0, 0.5, 0.0],
        ],
    )
    .unwrap();
    let beta = Beta::new(vec![0.1, 2.0, 1.0, 1.5]);
    let psi = psi_from_beta(&net, &beta, 0).unwrap();
    let r = net.h_operator(&beta).mul_vec(&psi);
    assert_eq!(psi[0], 1.0);
    assert!(psi.iter().all(|&x| x > 0.0));
    assert!(r[1..].iter().all(|x| x.abs() < 1e-10), "{r:?}");
    let psi32 = psi_from_beta(
        &idbm::ConductanceNetwork::<f32>::from_matrix(idbm::Matrix::<f32>::from_fn(4, 4, |i, j| net.weight(i, j) as f32)).unwrap(),
        &idbm::PotentialVector::new(beta.as_slice().iter().map(|&b| b as f32).collect()),
        0,
    )
    .unwrap();
    assert!(psi.iter().zip(&psi32).all(|(a, &b)| (a - b as f64).abs() < 1e-4));
}

#[test]
fn sde_psi_limit_is_the_mixing_psi() {
    let net = Network::complete(3, 1.0).unwrap();
    let theta = [1.7, 1.0, 0.6];
    let params = mixing_params(&net, &theta, 0).unwrap();
    let cfg = SdeConfig {
        record: RecordMode::HitTimes,
        ..SdeConfig::default()
    };
    let mut rng = Streams::new(6).replica(0);
    for _ in 0..50 {
        let rec = simulate(&params, &cfg, &mut rng).unwrap();
        let limit = psi_limit(&rec, &params).unwrap();
        let beta_u = rec.beta().unwrap();
        let psi = psi_from_beta(&net, &embed_beta(beta_u.as_slice(), 0), 0).unwrap();
        for (k, l) in limit.iter().enumerate() {
            let scaled = theta[0] * psi[k + 1];
            assert!((l - scaled).abs() < 1e-8 * l.abs().max(1.0), "{l} vs {scaled}");
        }
    }
}
