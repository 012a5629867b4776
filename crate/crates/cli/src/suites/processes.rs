//! Suites on paths: Bessel bridges, the Markov property, the VRJP mixture
//! and the psi martingale.

use idbm::bessel::{bridge_cdf, bridge_density, sample_bridge, sample_mixture, BridgeParams};
use idbm::rng::{run_replicas, Streams};
use idbm::sde::{
    quadratic_variation_residual, shift_at_multistopping, simulate, PathRecord, QvReport, RecordMode, SdeError,
    StoppingRule,
};
use idbm::stats::{bonferroni, ks_one_sample, ks_two_sample, mean_se, TestReport, DEFAULT_ALPHA};
use idbm::vrjp::{
    embed_beta, empirical_beta, markov_jump_simulate, mixing_params, psi_from_beta, vrjp_simulate, VrjpRecord,
};
use idbm::{Network, Params};
use quadrature::double_exponential::integrate;
use rand::Rng;
use serde_json::json;

use super::{triangle, Ctx, Outcome, Suite, SuiteResult};
use crate::artifacts::{num, Artifact, Table};

/// Jump sequences exported per process; the summary covers every replica.
const JUMP_EXPORT_REPLICAS: usize = 100;

fn collect<T, E: Into<Box<dyn std::error::Error + Send + Sync>>>(v: Vec<Result<T, E>>) -> SuiteResult<Vec<T>> {
    v.into_iter().map(|r| r.map_err(Into::into)).collect()
}

/// Mass of the bridge kernel, integrated piecewise around its bulk.
fn kernel_mass(p: &BridgeParams<f64>, t: f64) -> f64 {
    let frac = t / p.t_end;
    let m = p.theta * (1.0 - frac);
    let s = (t * (1.0 - frac)).sqrt();
    let mut cuts = vec![0.0, (m - 8.0 * s).max(0.0), m, m + 8.0 * s, m + 60.0 * s + 1.0];
    cuts.dedup();
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| integrate(|y| bridge_density(p, t, y).unwrap_or(0.0), w[0], w[1], 1e-13).integral)
        .sum()
}

pub fn bessel(ctx: &Ctx) -> SuiteResult<Outcome> {
    let streams = ctx.streams(Suite::Bessel);
    let mut rng = streams.replica(0);
    let mut reports = Vec::new();

    // (theta, T, t/T): fixed extremes, then random moderate cases.
    let mut cases = vec![
        (1.0, 1.0, 0.5),
        (0.3, 5.0, 0.01),
        (2.5, 0.2, 0.9),
        (1.7, 40.0, 0.3),
        (0.05, 0.001, 0.6),
        (4.0, 2.0, 0.999),
    ];
    for _ in 0..14 {
        let theta = rng.random_range(0.1..3.0);
        let t_end = 10f64.powf(rng.random_range(-2.0..1.3));
        cases.push((theta, t_end, rng.random_range(0.02..0.98)));
    }
    let mut kernel = Table::new("kernel.csv", &["theta", "t_end", "t", "mass"]);
    let mut worst = 0.0f64;
    for &(theta, t_end, frac) in &cases {
        let p = BridgeParams::new(theta, t_end)?;
        let mass = kernel_mass(&p, frac * t_end);
        worst = worst.max((mass - 1.0).abs());
        kernel.push(vec![num(theta), num(t_end), num(frac * t_end), num(mass)]);
    }
    reports.push(TestReport::residual("kernel normalization", worst, 1e-8, cases.len()));

    let bp = BridgeParams::new(1.2, 2.0)?;
    let grid = [0.0, 0.3, 1.0, 1.7, 2.0];
    let count = ctx.config.replicas_or(100_000);
    let draws = collect(run_replicas(streams.derive(1), count, ctx.workers, |_, rng| {
        sample_bridge(&bp, &grid, rng).map(|p| p.norms())
    }))?;
    let mut bridge = Table::new("bridge.csv", &["replica", "t", "x"]);
    for (r, d) in draws.iter().enumerate() {
        for (k, &t) in grid.iter().enumerate() {
            bridge.push(vec![r.to_string(), num(t), num(d[k])]);
        }
    }
    for (k, &t) in grid.iter().enumerate().take(4).skip(1) {
        let xs: Vec<f64> = draws.iter().map(|d| d[k]).collect();
        reports.push(ks_one_sample(
            format!("bridge sampler vs kernel at t={t}"),
            &xs,
            |y| bridge_cdf(&bp, t, y).unwrap_or(0.0),
            bonferroni(DEFAULT_ALPHA, 3),
        )?);
    }

    let edge = Params::new(Network::complete(2, 1.0)?, vec![1.0, 0.8], vec![0.3, 0.0])?;
    let t = 0.3;
    let m = ctx.config.replicas_or(10_000);
    let mix_cfg = ctx.sde(streams.derive(2).seed(), RecordMode::HitTimes, Vec::new());
    let mixture = sample_mixture(&edge, m, &[vec![0.0, t], vec![0.0, t]], &mix_cfg, ctx.workers)?;
    let sde_cfg = ctx.sde(streams.derive(3).seed(), RecordMode::Probes, vec![t]);
    let direct = collect(run_replicas(Streams::new(sde_cfg.seed), m, ctx.workers, |_, rng| {
        simulate(&edge, &sde_cfg, rng).and_then(|r| Ok(vec![r.x_at(0, t)?, r.x_at(1, t)?]))
    }))?;
    let mut table = Table::new("mixture.csv", &["source", "replica", "vertex", "t", "x"]);
    for i in 0..2 {
        let a: Vec<f64> = mixture.iter().map(|b| b.paths[i][1]).collect();
        let b: Vec<f64> = direct.iter().map(|x| x[i]).collect();
        for (r, (x, y)) in a.iter().zip(&b).enumerate() {
            table.push(vec!["mixture".into(), r.to_string(), i.to_string(), num(t), num(*x)]);
            table.push(vec!["sde".into(), r.to_string(), i.to_string(), num(t), num(*y)]);
        }
        reports.push(ks_two_sample(
            format!("vertex {i}: bridge mixture vs S.D.E. at t={t}"),
            &a,
            &b,
            bonferroni(DEFAULT_ALPHA, 2),
        )?);
    }

    Ok(Outcome {
        reports,
        artifacts: vec![Artifact::Csv(kernel), Artifact::Csv(bridge), Artifact::Csv(table)],
    })
}

/// Residual hitting times after a stopping rule, either read off the same
/// path or from a fresh run with the deformed parameters.
fn residuals(
    params: &Params,
    rule: &StoppingRule,
    record: RecordMode,
    probes: &[f64],
    fresh: bool,
    streams: Streams,
    ctx: &Ctx,
) -> SuiteResult<Vec<Vec<Option<f64>>>> {
    let n = params.n();
    let cfg = ctx.sde(0, record, probes.to_vec());
    let fresh_cfg = ctx.sde(0, RecordMode::HitTimes, Vec::new());
    collect(run_replicas(
        streams,
        ctx.config.replicas_or(10_000),
        ctx.workers,
        |_, rng| -> Result<Vec<Option<f64>>, SdeError> {
            let rec = simulate(params, &cfg, rng)?;
            let state = shift_at_multistopping(&rec, rule, params)?;
            let mut out = vec![None; n];
            if !fresh {
                for &i in &state.surviving {
                    out[i] = Some(rec.t_hit[i] - state.clamped.as_slice()[i]);
                }
            } else if let Some(rp) = state.residual_params()? {
                let again = simulate(&rp, &fresh_cfg, rng)?;
                for (k, &i) in state.surviving.iter().enumerate() {
                    out[i] = Some(again.t_hit[k]);
                }
            }
            Ok(out)
        },
    ))
}

pub fn markov(ctx: &Ctx) -> SuiteResult<Outcome> {
    let streams = ctx.streams(Suite::Markov);
    let params = Params::new(Network::complete(2, 1.0)?, vec![1.0, 1.3], vec![0.2, 0.0])?;
    let t0 = vec![0.15, 0.35];
    let levels: Vec<f64> = params.theta().iter().map(|t| 0.5 * t).collect();
    let rules = [
        ("fixed times", StoppingRule::FixedTimes(t0.clone()), RecordMode::Probes, t0.clone()),
        ("level crossing", StoppingRule::LevelCrossing(levels), RecordMode::Full, Vec::new()),
    ];
    let mut reports = Vec::new();
    let mut table = Table::new("residuals.csv", &["rule", "sample", "replica", "vertex", "residual"]);
    for (r, (label, rule, mode, probes)) in rules.iter().enumerate() {
        let r = r as u64;
        let same = residuals(&params, rule, *mode, probes, false, streams.derive(2 * r), ctx)?;
        let fresh = residuals(&params, rule, *mode, probes, true, streams.derive(2 * r + 1), ctx)?;
        for (sample, rows) in [("same-path", &same), ("fresh", &fresh)] {
            for (k, row) in rows.iter().enumerate() {
                for (i, v) in row.iter().enumerate() {
                    if let Some(v) = v {
                        table.push(vec![label.to_string(), sample.into(), k.to_string(), i.to_string(), num(*v)]);
                    }
                }
            }
        }
        for i in 0..params.n() {
            let a: Vec<f64> = same.iter().filter_map(|row| row[i]).collect();
            let b: Vec<f64> = fresh.iter().filter_map(|row| row[i]).collect();
            reports.push(ks_two_sample(
                format!("{label}, vertex {i}: residual vs fresh deformed run"),
                &a,
                &b,
                DEFAULT_ALPHA,
            )?);
        }
    }
    Ok(Outcome {
        reports,
        artifacts: vec![Artifact::Csv(table)],
    })
}

fn jump_table(file: &str, records: &[VrjpRecord]) -> Artifact {
    let mut t = Table::new(file, &["replica", "jump", "time", "vertex"]);
    for (r, rec) in records.iter().take(JUMP_EXPORT_REPLICAS).enumerate() {
        for (k, &v) in rec.visited.iter().enumerate() {
            let time = if k == 0 { 0.0 } else { rec.jump_times[k - 1] };
            t.push(vec![r.to_string(), k.to_string(), num(time), v.to_string()]);
        }
    }
    Artifact::Csv(t)
}

fn summary(records: &[VrjpRecord]) -> serde_json::Value {
    records
        .iter()
        .map(|r| json!({ "local_times": r.local_times, "jump_counts": r.jump_counts }))
        .collect()
}

pub fn vrjp(ctx: &Ctx) -> SuiteResult<Outcome> {
    let streams = ctx.streams(Suite::Vrjp);
    let net = Network::complete(3, 1.0)?;
    let theta = [1.0; 3];
    let (delta, horizon) = (0, 200.0);
    let count = ctx.config.replicas_or(10_000);

    let direct = collect(run_replicas(streams.derive(1), count, ctx.workers, |_, rng| {
        vrjp_simulate(&net, &theta, delta, horizon, rng)
    }))?;
    let mix = mixing_params(&net, &theta, delta)?;
    let cfg = ctx.sde(0, RecordMode::HitTimes, Vec::new());
    let mixture = collect(run_replicas(streams.derive(2), count, ctx.workers, |_, rng| -> SuiteResult<VrjpRecord> {
        let beta_u = simulate(&mix, &cfg, rng)?.beta()?;
        let psi = psi_from_beta(&net, &embed_beta(beta_u.as_slice(), delta), delta)?;
        Ok(markov_jump_simulate(&net, &psi, delta, horizon, rng)?)
    }))?;

    let broken = direct.iter().chain(&mixture).filter(|r| !r.invariants_hold(1e-9)).count();
    let mut reports = vec![TestReport::residual("records violating time partition or counts", broken as f64, 0.5, 2 * count)];
    let alpha = bonferroni(DEFAULT_ALPHA, 2 * net.n());
    for i in 0..net.n() {
        let occ = |rs: &[VrjpRecord]| rs.iter().map(|r| r.local_times[i] / r.t_max).collect::<Vec<f64>>();
        reports.push(ks_two_sample(
            format!("vertex {i}: occupation fraction, VRJP vs mixture"),
            &occ(&direct),
            &occ(&mixture),
            alpha,
        )?);
        let visits = |rs: &[VrjpRecord]| rs.iter().map(|r| r.jump_counts[i] as f64).collect::<Vec<f64>>();
        reports.push(ks_two_sample(
            format!("vertex {i}: visit count, VRJP vs mixture"),
            &visits(&direct),
            &visits(&mixture),
            alpha,
        )?);
    }

    let u: Vec<usize> = (0..net.n()).filter(|&i| i != delta).collect();
    let estimates: Vec<Vec<Option<f64>>> = direct.iter().map(empirical_beta).collect();
    for (k, &i) in u.iter().enumerate() {
        let (mu, shape) = mix.marginal_ig_params(k)?;
        let xs: Vec<f64> = estimates
            .iter()
            .filter_map(|b| b[i])
            .map(|b| 1.0 / (2.0 * b - net.weight(i, i)))
            .collect();
        reports.push(ks_one_sample(
            format!("vertex {i}: empirical beta at t={horizon} vs IG({mu:.4}, {shape:.4})"),
            &xs,
            |x| idbm::stats::ig_cdf(mu, shape, x).unwrap_or(0.0),
            bonferroni(DEFAULT_ALPHA, u.len()),
        )?);
    }

    let summary = json!({
        "horizon": horizon,
        "delta": delta,
        "vrjp": summary(&direct),
        "mixture": summary(&mixture),
    });
    Ok(Outcome {
        reports,
        artifacts: vec![
            jump_table("vrjp_jumps.csv", &direct),
            jump_table("mixture_jumps.csv", &mixture),
            Artifact::Json {
                file: "vrjp_summary.json".into(),
                value: summary,
            },
        ],
    })
}

/// `psi` at `t`: the grid value, or the final value once every coordinate has hit.
fn psi_at(rec: &PathRecord, t: f64) -> Result<Vec<f64>, SdeError> {
    match rec.grid_index(t) {
        Some(k) => Ok(rec.psi[k].clone()),
        None if t >= rec.horizon() => Ok(rec.psi.last().cloned().unwrap_or_default()),
        None => Err(SdeError::NotOnGrid(t)),
    }
}

struct PsiSummary {
    psi: Vec<Vec<f64>>,
    x: Vec<Vec<f64>>,
    qv: Vec<QvReport>,
    t_hit: Vec<f64>,
}

pub fn psi_martingale(ctx: &Ctx) -> SuiteResult<Outcome> {
    let params = ctx.params_or(triangle);
    let n = params.n();
    let probes = if ctx.config.probe_times.is_empty() {
        vec![0.1, 0.25, 0.4]
    } else {
        ctx.config.probe_times.clone()
    };
    let count = ctx.config.replicas_or(10_000);
    let cfg = ctx.sde(ctx.streams(Suite::PsiMartingale).seed(), RecordMode::Full, probes.clone());
    let runs = collect(run_replicas(Streams::new(cfg.seed), count, ctx.workers, |_, rng| -> Result<PsiSummary, SdeError> {
        let rec = simulate(&params, &cfg, rng)?;
        let mut out = PsiSummary {
            psi: Vec::new(),
            x: Vec::new(),
            qv: Vec::new(),
            t_hit: rec.t_hit.clone(),
        };
        for &t in &probes {
            out.psi.push(psi_at(&rec, t)?);
            out.x.push((0..n).map(|i| rec.x_at(i, t)).collect::<Result<_, _>>()?);
            out.qv.push(quadratic_variation_residual(&rec, &params, t)?);
        }
        Ok(out)
    }))?;

    let mut reports = Vec::new();
    for (p, &t) in probes.iter().enumerate() {
        for i in 0..n {
            let xs: Vec<f64> = runs.iter().map(|r| r.psi[p][i]).collect();
            let (m, se) = mean_se(&xs)?;
            reports.push(TestReport::se_band(format!("E psi_{i}({t}) = theta_{i}"), m, params.theta()[i], se, 3.0, count));
        }
        for i in 0..n {
            for j in i..n {
                let diff: Vec<f64> = runs
                    .iter()
                    .map(|r| r.qv[p].empirical[(i, j)] - r.qv[p].expected[(i, j)])
                    .collect();
                let (m, se) = mean_se(&diff)?;
                reports.push(TestReport::se_band(format!("quadratic covariation ({i},{j}) at t={t}"), m, 0.0, se, 5.0, count));
            }
        }
    }

    let mut paths = Table::new("paths.csv", &["replica", "vertex", "t", "x", "psi"]);
    for (r, run) in runs.iter().enumerate() {
        for (p, &t) in probes.iter().enumerate() {
            for i in 0..n {
                paths.push(vec![r.to_string(), i.to_string(), num(t), num(run.x[p][i]), num(run.psi[p][i])]);
            }
        }
    }
    let t_hit: Vec<&Vec<f64>> = runs.iter().map(|r| &r.t_hit).collect();
    Ok(Outcome {
        reports,
        artifacts: vec![
            Artifact::Csv(paths),
            Artifact::Json {
                file: "t_hit.json".into(),
                value: json!(t_hit),
            },
        ],
    })
}
