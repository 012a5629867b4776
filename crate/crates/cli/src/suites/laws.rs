//! Suites on the law of beta: algebra, marginals, Laplace transforms,
//! dependence, restriction and the path-density normalization.

use idbm::rng::{run_replicas, StreamRng, Streams};
use idbm::stats::{
    bonferroni, empirical_laplace, gamma_cdf, ig_cdf, independence_check, ks_one_sample, mean_se, TestReport,
    DEFAULT_ALPHA,
};
use idbm::{Beta, Mat, Network, Params, Times};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::{beta_table, triangle, Ctx, Outcome, Suite, SuiteResult};
use crate::artifacts::{num, Artifact, Table};

/// Stream family of the triangle sample shared by the Laplace and marginal suites.
const TRIANGLE_SAMPLE: u64 = 0x7269;

/// Connected network on `n` vertices: weights in [0, 2) with small ones
/// dropped, plus a spanning path of weight at least 0.1.
fn random_network(rng: &mut StreamRng, n: usize, diagonal: bool) -> Network {
    let mut w = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = rng.random_range(0.0..2.0);
            let v = if i == j {
                if diagonal { v } else { 0.0 }
            } else if v < 0.6 {
                0.0
            } else {
                v
            };
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    for i in 1..n {
        let v = w[(i - 1, i)].max(0.1);
        w[(i - 1, i)] = v;
        w[(i, i - 1)] = v;
    }
    Network::from_matrix(w).expect("spanning path keeps it connected")
}

fn random_params(rng: &mut StreamRng, n: usize) -> Params {
    let net = random_network(rng, n, true);
    let theta = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
    let eta = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
    Params::new(net, theta, eta).expect("valid by construction")
}

/// A point of `{H_beta > 0}` by diagonal dominance.
fn support_point(rng: &mut StreamRng, p: &Params) -> Beta {
    let w = p.network().weights();
    Beta::new(
        (0..p.n())
            .map(|i| 0.5 * w.row(i).iter().sum::<f64>() + 0.5 * w[(i, i)] + rng.random_range(0.01..3.0))
            .collect(),
    )
}

/// Ten points along rotating directions, scaled up to twice the base.
pub fn default_lambda_grid(n: usize) -> Vec<Vec<f64>> {
    const DIRS: [f64; 3] = [1.0, 0.5, 0.25];
    (1..=10)
        .map(|k| (0..n).map(|i| 0.2 * k as f64 * DIRS[(i + k) % 3]).collect())
        .collect()
}

fn lambda_text(l: &[f64]) -> String {
    l.iter().map(|&x| num(x)).collect::<Vec<_>>().join(";")
}

/// Empirical against closed-form Laplace transform at every grid point.
fn laplace_checks(
    label: &str,
    draws: &[Vec<f64>],
    grid: &[Vec<f64>],
    exact: impl Fn(&[f64]) -> SuiteResult<f64>,
    table: &mut Table,
) -> SuiteResult<Vec<TestReport>> {
    let mut reports = Vec::new();
    for (k, lam) in grid.iter().enumerate() {
        let (m, se) = empirical_laplace(draws, lam)?;
        let target = exact(lam)?;
        table.push(vec![k.to_string(), lambda_text(lam), num(m), num(se), num(target)]);
        reports.push(TestReport::se_band(format!("{label} at lambda[{k}]"), m, target, se, 3.0, draws.len()));
    }
    Ok(reports)
}

pub fn algebra(ctx: &Ctx) -> SuiteResult<Outcome> {
    let mut rng = ctx.streams(Suite::Algebra).replica(0);
    let count = ctx.config.replicas_or(1000);
    let mut table = Table::new(
        "algebra.csv",
        &["instance", "n", "factorization", "determinant", "bilinear", "inverse"],
    );
    let mut worst = 0.0f64;
    for k in 0..count {
        let n = 1 + k % 6;
        let p = random_params(&mut rng, n);
        let net = p.network();
        // Times scaled so that K stays positive definite at t0 + t1.
        let rho = (0..n).map(|i| net.weights().row(i).iter().sum::<f64>()).fold(1e-9, f64::max);
        let mut times = || Times::new((0..n).map(|_| 0.45 * rng.random_range(0.01..1.0) / rho).collect());
        let (t0, t1) = (times()?, times()?);
        let r = net.algebra_residuals(&t0, &t1, p.eta())?;
        let sum = t0.add(&t1)?;
        let h = net.h_operator(&sum.half_reciprocal());
        let inverse = net.h_inverse_extended(&sum)?.matmul(&h).max_abs_diff(&Mat::identity(n));
        let max = r.max().max(inverse);
        worst = worst.max(max);
        table.push(vec![
            k.to_string(),
            n.to_string(),
            num(r.factorization),
            num(r.determinant),
            num(r.bilinear),
            num(inverse),
        ]);
    }
    Ok(Outcome {
        reports: vec![TestReport::residual("max relative residual over random instances", worst, 1e-9, count)],
        artifacts: vec![Artifact::Csv(table)],
    })
}

pub fn one_vertex(ctx: &Ctx) -> SuiteResult<Outcome> {
    let streams = ctx.streams(Suite::OneVertex);
    let count = ctx.config.replicas_or(100_000);
    let single = || Network::new(1, &[vec![0.0]]).expect("one vertex");
    let driftless = Params::new(single(), vec![1.0], vec![0.0])?;
    let drifted = Params::new(single(), vec![1.0], vec![1.0])?;

    let a = ctx.betas(&driftless, count, streams.derive(1).seed())?;
    let xs: Vec<f64> = a.iter().map(|b| b[0]).collect();
    let gamma = ks_one_sample("eta=0: 1/(2T) vs Gamma(1/2, 1)", &xs, |x| gamma_cdf(0.5, 1.0, x).unwrap_or(0.0), DEFAULT_ALPHA)?;

    let b = ctx.betas(&drifted, count, streams.derive(2).seed())?;
    let ts: Vec<f64> = b.iter().map(|b| 0.5 / b[0]).collect();
    let ig = ks_one_sample("eta=1: T vs IG(1, 1)", &ts, |x| ig_cdf(1.0, 1.0, x).unwrap_or(0.0), DEFAULT_ALPHA)?;

    Ok(Outcome {
        reports: vec![gamma, ig],
        artifacts: vec![beta_table("beta_eta0.csv", &a), beta_table("beta_eta1.csv", &b)],
    })
}

fn triangle_sample(ctx: &Ctx) -> SuiteResult<(Params, std::rc::Rc<Vec<Vec<f64>>>)> {
    let params = ctx.params_or(triangle);
    let seed = Streams::new(ctx.config.seed).derive(TRIANGLE_SAMPLE).seed();
    let draws = ctx.betas(&params, ctx.config.replicas_or(100_000), seed)?;
    Ok((params, draws))
}

pub fn laplace_triangle(ctx: &Ctx) -> SuiteResult<Outcome> {
    let (params, draws) = triangle_sample(ctx)?;
    let grid = if ctx.config.lambda_grid.is_empty() {
        default_lambda_grid(params.n())
    } else {
        ctx.config.lambda_grid.clone()
    };
    let mut table = Table::new("laplace.csv", &["point", "lambda", "empirical", "se", "closed_form"]);
    let mut reports = laplace_checks("laplace", &draws, &grid, |l| Ok(params.laplace_transform(l)?), &mut table)?;

    // The functional identity: the integrand averages to exp(-<lambda, theta>).
    let mut identity = Table::new("functional_identity.csv", &["point", "lambda", "empirical", "se", "target"]);
    for k in [0, grid.len() / 2, grid.len() - 1] {
        let lam = &grid[k];
        let values = draws
            .iter()
            .map(|b| params.functional_identity_integrand(lam, &Beta::new(b.clone())))
            .collect::<Result<Vec<f64>, _>>()?;
        let (m, se) = mean_se(&values)?;
        let target = (-lam.iter().zip(params.theta()).map(|(l, t)| l * t).sum::<f64>()).exp();
        identity.push(vec![k.to_string(), lambda_text(lam), num(m), num(se), num(target)]);
        reports.push(TestReport::se_band(format!("functional identity at lambda[{k}]"), m, target, se, 3.0, draws.len()));
    }
    Ok(Outcome {
        reports,
        artifacts: vec![beta_table("beta.csv", &draws), Artifact::Csv(table), Artifact::Csv(identity)],
    })
}

pub fn marginal_ig(ctx: &Ctx) -> SuiteResult<Outcome> {
    let (params, draws) = triangle_sample(ctx)?;
    let n = params.n();
    let alpha = bonferroni(DEFAULT_ALPHA, n);
    let w = params.network().weights();
    let mut reports = Vec::new();
    for i in 0..n {
        let (mu, shape) = params.marginal_ig_params(i)?;
        let xs: Vec<f64> = draws.iter().map(|b| 1.0 / (2.0 * b[i] - w[(i, i)])).collect();
        reports.push(ks_one_sample(
            format!("vertex {i}: 1/(2 beta - W_ii) vs IG({mu:.4}, {shape:.4})"),
            &xs,
            |x| ig_cdf(mu, shape, x).unwrap_or(0.0),
            alpha,
        )?);
    }
    Ok(Outcome {
        reports,
        artifacts: vec![beta_table("beta.csv", &draws)],
    })
}

pub fn dependence(ctx: &Ctx) -> SuiteResult<Outcome> {
    let params = Params::without_eta(Network::path(3, 1.0)?, vec![1.0; 3])?;
    let count = ctx.config.replicas_or(100_000);
    let draws = ctx.betas(&params, count, ctx.streams(Suite::Dependence).seed())?;
    let pairs: Vec<(f64, f64)> = draws.iter().map(|b| (b[0], b[2])).collect();
    let reports = [(0.5, 0.5), (1.0, 2.0), (2.0, 1.0)]
        .iter()
        .map(|&(l1, l2)| independence_check(format!("ends of the path factorize at ({l1}, {l2})"), &pairs, l1, l2))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Outcome {
        reports,
        artifacts: vec![beta_table("beta.csv", &draws)],
    })
}

pub fn restriction(ctx: &Ctx) -> SuiteResult<Outcome> {
    let streams = ctx.streams(Suite::Restriction);
    let mut rng = streams.replica(0);
    let mut chain = Table::new("chain_rule.csv", &["point", "n", "cut", "residual"]);
    let mut worst = 0.0f64;
    let points = 1000;
    for k in 0..points {
        let n = 2 + k % 4;
        let p = random_params(&mut rng, n);
        let beta = support_point(&mut rng, &p);
        let cut = rng.random_range(1..n);
        let u: Vec<usize> = (0..cut).collect();
        let marginal = p.restricted_params_with(&u, true)?;
        let conditional = p.conditional_params(&u, &beta.as_slice()[..cut])?;
        let split = marginal.log_density(&Beta::new(beta.as_slice()[..cut].to_vec()))
            + conditional.log_density(&Beta::new(beta.as_slice()[cut..].to_vec()));
        let residual = (p.log_density(&beta) - split).abs();
        worst = worst.max(residual);
        chain.push(vec![k.to_string(), n.to_string(), cut.to_string(), num(residual)]);
    }
    let mut reports = vec![TestReport::residual("density chain rule", worst, 1e-8, points)];

    let net = Network::new(
        4,
        &[
            vec![0.0, 1.0, 0.3, 0.0],
            vec![1.0, 0.0, 0.7, 2.0],
            vec![0.3, 0.7, 0.0, 0.5],
            vec![0.0, 2.0, 0.5, 0.0],
        ],
    )?;
    let full = Params::new(net, vec![1.0, 0.8, 1.2, 0.9], vec![0.2, 0.0, 0.0, 0.1])?;
    let u = [0, 1];
    let restricted = full.restricted_params(&u)?;
    let draws = ctx.betas(&restricted, ctx.config.replicas_or(100_000), streams.derive(1).seed())?;
    let mut table = Table::new("restricted_laplace.csv", &["point", "lambda", "empirical", "se", "closed_form"]);
    let exact = |l: &[f64]| -> SuiteResult<f64> {
        let mut padded = l.to_vec();
        padded.resize(full.n(), 0.0);
        Ok(full.laplace_transform(&padded)?)
    };
    reports.extend(laplace_checks("restricted laplace", &draws, &default_lambda_grid(u.len()), exact, &mut table)?);
    Ok(Outcome {
        reports,
        artifacts: vec![Artifact::Csv(chain), beta_table("beta_restricted.csv", &draws), Artifact::Csv(table)],
    })
}

/// Mean of the path-density weight under independent driftless hitting times.
pub fn radon_nikodym(ctx: &Ctx) -> SuiteResult<Outcome> {
    let streams = ctx.streams(Suite::RadonNikodym);
    let count = ctx.config.replicas_or(200_000);
    let edge = Params::new(Network::complete(2, 1.0)?, vec![1.0, 1.5], vec![0.0, 0.0])?;
    let tri = Params::new(
        Network::new(3, &[vec![0.0, 1.0, 0.5], vec![1.0, 0.0, 2.0], vec![0.5, 2.0, 0.0]])?,
        vec![1.0, 0.8, 1.2],
        vec![0.5, 0.0, 0.2],
    )?;
    let mut reports = Vec::new();
    let mut table = Table::new("weights.csv", &["n", "replica", "weight"]);
    for (k, params) in [edge, tri].iter().enumerate() {
        // 1/(2 T_i) ~ Gamma(1/2, rate theta_i^2) for a driftless hit from theta_i.
        let laws = params
            .theta()
            .iter()
            .map(|&th| Gamma::new(0.5, 1.0 / (th * th)))
            .collect::<Result<Vec<_>, _>>()?;
        let weights = run_replicas(streams.derive(k as u64), count, ctx.workers, |_, rng| {
            let t: Vec<f64> = laws.iter().map(|g| 0.5 / g.sample(rng)).collect();
            Times::new(t).map(|t| params.radon_nikodym_weight(&t))
        })
        .into_iter()
        .collect::<Result<Vec<f64>, _>>()?;
        let (m, se) = mean_se(&weights)?;
        reports.push(TestReport::se_band(format!("n={}: mean weight", params.n()), m, 1.0, se, 3.0, count));
        for (r, w) in weights.iter().enumerate() {
            table.push(vec![params.n().to_string(), r.to_string(), num(*w)]);
        }
    }
    Ok(Outcome {
        reports,
        artifacts: vec![Artifact::Csv(table)],
    })
}
