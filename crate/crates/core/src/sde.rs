//! Euler–Maruyama integration of the interacting-drift S.D.E. for `X`,
//! hitting-time extraction and the shifted-process parameters.
//!
//! State between steps is `X` on the alive set; `psi` is recomputed from
//! `K_{t∧T} psi = X + (t∧T) eta` after every step through the symmetric form
//! `I - S^{1/2} W S^{1/2}` of `K` (same spectrum, `S = diag(t∧T)`), whose
//! pivot ratio doubles as the conditioning check.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Matrix, SymmetricFactor};
use crate::network::{DeformedParams, NetworkError, TimeVector};
use crate::nu::{NuError, NuParams};
use crate::rng::{run_replicas, StreamRng, Streams};
use crate::PotentialVector;

/// Largest accepted pivot ratio of the symmetrized `K_{t∧T}`.
pub const CONDITION_LIMIT: f64 = 1e12;

const DRIFT_FRACTION: f64 = 0.1;
const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdeError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Params(#[from] NuError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("K_(t^T) near singular at t = {t} (pivot ratio {ratio:.3e}); try a smaller dt")]
    KNearSingular { t: f64, ratio: f64 },
    #[error("{alive} coordinate(s) still alive at t_max = {t_max}")]
    HorizonExceeded { t_max: f64, alive: usize },
    #[error("path record is incomplete (some coordinate never hit 0)")]
    IncompleteRecord,
    #[error("shift time {t0} for vertex {vertex} is beyond the recorded horizon {horizon}")]
    BeyondHorizon { vertex: usize, t0: f64, horizon: f64 },
    #[error("time {0} is not a recorded grid point; add it to probe_times")]
    NotOnGrid(f64),
    #[error("stopping rule never triggered for vertex {vertex}")]
    RuleNeverTriggered { vertex: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum HitRule {
    LinearInterpolation,
    #[default]
    BridgeProbability,
}

/// Which grid points are kept in the [`PathRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RecordMode {
    /// Every integration step, with Brownian increments.
    #[default]
    Full,
    /// Time 0, the probe times and the final time.
    Probes,
    /// Time 0 and the final time only.
    HitTimes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdeConfig {
    /// Base step.
    pub dt: f64,
    /// Safety horizon; `None` picks one from the parameters.
    pub t_max: Option<f64>,
    pub hit_rule: HitRule,
    /// Below this alive `X_i` the step is `dt/4`; `None` means `0.05 * min theta`.
    pub adaptive_floor: Option<f64>,
    pub seed: u64,
    /// Far from zero the step grows to `growth * min X^2`; `0` keeps it at `dt`.
    pub growth: f64,
    /// Step cap once growth is active; `None` picks one from `W`.
    pub max_step: Option<f64>,
    /// Steps are shortened to land exactly on these times.
    pub probe_times: Vec<f64>,
    pub record: RecordMode,
}

impl Default for SdeConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_max: None,
            hit_rule: HitRule::BridgeProbability,
            adaptive_floor: None,
            seed: 0,
            growth: 0.02,
            max_step: None,
            probe_times: Vec::new(),
            record: RecordMode::Full,
        }
    }
}

impl SdeConfig {
    pub fn validate(&self) -> Result<(), SdeError> {
        let bad = |m: &str| Err(SdeError::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive and finite");
        }
        if matches!(self.t_max, Some(t) if !(t > 0.0)) {
            return bad("t_max must be positive");
        }
        if matches!(self.adaptive_floor, Some(f) if !(f > 0.0 && f.is_finite())) {
            return bad("adaptive_floor must be positive");
        }
        if !(self.growth >= 0.0 && self.growth.is_finite()) {
            return bad("growth must be nonnegative");
        }
        if matches!(self.max_step, Some(m) if !(m > 0.0)) {
            return bad("max_step must be positive");
        }
        if self.probe_times.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return bad("probe times must be finite and nonnegative");
        }
        Ok(())
    }

    /// Horizon used when `t_max` is unset. Per coordinate, with `d` the
    /// effective drift: `50 theta/d + 100/d^2` if `d > 0`, else `1/W_ii` if
    /// `W_ii > 0` (the marginal is a bridge ending before it), else
    /// `1e16 theta^2` (a driftless hit is heavy tailed; this truncates with
    /// probability about `1e-8`).
    pub fn default_t_max(params: &NuParams<f64>) -> f64 {
        let w = params.network().weights();
        (0..params.n())
            .map(|i| {
                let d = params.effective_drift(i);
                let th = params.theta()[i];
                if d > 0.0 {
                    50.0 * th / d + 100.0 / (d * d)
                } else if w[(i, i)] > 0.0 {
                    1.0 / w[(i, i)]
                } else {
                    1e16 * th * th
                }
            })
            .fold(0.0, f64::max)
    }

    /// Default step cap: `0.005 / max_i sum_j W_ij`, unbounded when `W = 0`.
    pub fn default_max_step(params: &NuParams<f64>) -> f64 {
        let w = params.network().weights();
        let rho = (0..params.n())
            .map(|i| w.row(i).iter().sum::<f64>())
            .fold(0.0, f64::max);
        if rho > 0.0 {
            0.005 / rho
        } else {
            f64::INFINITY
        }
    }

    fn sorted_probes(&self) -> Vec<f64> {
        let mut p = self.probe_times.clone();
        p.sort_by(f64::total_cmp);
        p.dedup();
        p
    }
}

/// One simulated path. Grid-indexed vectors are stored time-major:
/// `x[k][i]` is `X_i` at `grid[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub grid: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
    pub t_hit: Vec<f64>,
    /// `increments[k]` drove the step `grid[k] -> grid[k+1]` (full mode only).
    pub increments: Vec<Vec<f64>>,
}

impl PathRecord {
    pub fn n(&self) -> usize {
        self.t_hit.len()
    }

    pub fn is_complete(&self) -> bool {
        self.t_hit.iter().all(|t| t.is_finite())
    }

    pub fn horizon(&self) -> f64 {
        self.grid.last().copied().unwrap_or(0.0)
    }

    pub fn hit_times(&self) -> Result<TimeVector<f64>, SdeError> {
        if !self.is_complete() {
            return Err(SdeError::IncompleteRecord);
        }
        Ok(TimeVector::new(self.t_hit.clone())?)
    }

    /// `beta = 1/(2T)`.
    pub fn beta(&self) -> Result<PotentialVector<f64>, SdeError> {
        Ok(self.hit_times()?.half_reciprocal())
    }

    /// Index of the grid point equal to `t` up to rounding.
    pub fn grid_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * t.abs().max(1.0);
        let k = self.grid.partition_point(|&g| g < t - tol);
        (k < self.grid.len() && (self.grid[k] - t).abs() <= tol).then_some(k)
    }

    /// Value of `X_i` at `t`, assuming `t` is a grid point or past the hit.
    pub fn x_at(&self, vertex: usize, t: f64) -> Result<f64, SdeError> {
        if t >= self.t_hit[vertex] {
            return Ok(0.0);
        }
        let k = self.grid_index(t).ok_or(SdeError::NotOnGrid(t))?;
        Ok(self.x[k][vertex])
    }

    /// Monotone absorption and nonnegativity over the whole record.
    pub fn absorption_holds(&self) -> bool {
        self.grid.iter().zip(&self.x).all(|(&t, row)| {
            row.iter()
                .zip(&self.t_hit)
                .all(|(&x, &th)| x >= 0.0 && (t < th || x == 0.0))
        })
    }
}

/// Reusable buffers for the `psi` solve.
struct PsiSolver {
    n: usize,
    k_sym: Vec<f64>,
    factor: SymmetricFactor<f64>,
    rhs: Vec<f64>,
    z: Vec<f64>,
}

impl PsiSolver {
    fn new(n: usize) -> Self {
        Self {
            n,
            k_sym: vec![0.0; n * n],
            factor: SymmetricFactor::default(),
            rhs: vec![0.0; n],
            z: vec![0.0; n],
        }
    }

    /// Solves `K_s psi = y`, rejecting ill-conditioned `K_s`.
    fn solve(&mut self, w: &Matrix<f64>, s: &[f64], y: &[f64], t: f64, psi: &mut [f64]) -> Result<(), SdeError> {
        let n = self.n;
        for i in 0..n {
            let si = s[i].sqrt();
            for j in 0..n {
                let v = -si * w[(i, j)] * s[j].sqrt();
                self.k_sym[i * n + j] = if i == j { 1.0 + v } else { v };
            }
        }
        if self.factor.refactor(n, &self.k_sym).is_err() {
            return Err(SdeError::KNearSingular { t, ratio: f64::INFINITY });
        }
        let ratio = self.factor.pivot_ratio();
        if !(ratio <= CONDITION_LIMIT) {
            return Err(SdeError::KNearSingular { t, ratio });
        }
        // K = S^{1/2} K_sym S^{-1/2}; every s_i is positive after the first step.
        for i in 0..n {
            debug_assert!(s[i] > 0.0);
            self.rhs[i] = y[i] / s[i].sqrt();
        }
        self.factor.solve_into(&self.rhs, &mut self.z);
        for i in 0..n {
            psi[i] = s[i].sqrt() * self.z[i];
        }
        Ok(())
    }
}

/// Integrates one path from `X(0) = theta` until every coordinate hits 0.
pub fn simulate(params: &NuParams<f64>, config: &SdeConfig, rng: &mut StreamRng) -> Result<PathRecord, SdeError> {
    config.validate()?;
    let n = params.n();
    let w = params.network().weights();
    let theta = params.theta();
    let eta = params.eta();
    let t_max = config.t_max.unwrap_or_else(|| SdeConfig::default_t_max(params));
    let min_theta = theta.iter().copied().fold(f64::INFINITY, f64::min);
    let floor = config.adaptive_floor.unwrap_or(0.05 * min_theta);
    let max_step = config.max_step.unwrap_or_else(|| SdeConfig::default_max_step(params));
    let probes = config.sorted_probes();
    let full = config.record == RecordMode::Full;
    let dt = config.dt;

    let mut t = 0.0;
    let mut x = theta.to_vec();
    let mut psi = theta.to_vec();
    let mut t_hit = vec![f64::INFINITY; n];
    let mut alive = vec![true; n];
    let mut n_alive = n;
    let mut s = vec![0.0; n];
    let mut y = theta.to_vec();
    let mut drift = vec![0.0; n];
    let mut db = vec![0.0; n];
    let mut solver = PsiSolver::new(n);
    let mut next_probe = probes.partition_point(|&p| p <= 0.0);

    let mut rec = PathRecord {
        grid: vec![0.0],
        x: vec![x.clone()],
        y: vec![y.clone()],
        psi: vec![psi.clone()],
        t_hit: Vec::new(),
        increments: Vec::new(),
    };

    while n_alive > 0 {
        if t >= t_max {
            return Err(SdeError::HorizonExceeded { t_max, alive: n_alive });
        }
        let mut min_x = f64::INFINITY;
        let mut min_ratio = f64::INFINITY;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            let wpsi: f64 = w.row(i).iter().zip(&psi).map(|(a, b)| a * b).sum();
            drift[i] = wpsi + eta[i];
            min_x = min_x.min(x[i]);
            if drift[i] != 0.0 {
                min_ratio = min_ratio.min(x[i] / drift[i].abs());
            }
        }

        let mut h = if min_x < floor { 0.25 * dt } else { dt };
        if config.growth > 0.0 && min_x >= floor {
            h = (config.growth * min_x * min_x).min(max_step).max(dt);
        }
        // Near det K = 0 the drift grows like X/(t_c - t); keeping the step a
        // small fraction of X/|drift| stops it from jumping past t_c.
        h = h.min(DRIFT_FRACTION * min_ratio).max(MIN_STEP * (1.0 + t));
        let mut landed_probe = false;
        if next_probe < probes.len() && t + h >= probes[next_probe] {
            h = probes[next_probe] - t;
            landed_probe = true;
        }
        if t + h > t_max {
            h = t_max - t;
        }
        let t_new = if landed_probe { probes[next_probe] } else { t + h };
        if landed_probe {
            next_probe += 1;
        }

        let sqrt_h = h.sqrt();
        for i in 0..n {
            if !alive[i] {
                db[i] = 0.0;
                continue;
            }
            let z: f64 = rng.sample(StandardNormal);
            db[i] = sqrt_h * z;
            let xa = x[i];
            let xb = xa + db[i] - drift[i] * h;
            let mut hit = None;
            if xb <= 0.0 {
                hit = Some(t + h * xa / (xa - xb));
            } else if config.hit_rule == HitRule::BridgeProbability {
                let p = (-2.0 * xa * xb / h).exp();
                let u: f64 = rng.random();
                if u < p {
                    hit = Some(t + h * xa / (xa + xb));
                }
            }
            match hit {
                Some(tau) => {
                    t_hit[i] = tau.min(t_new);
                    x[i] = 0.0;
                    alive[i] = false;
                    n_alive -= 1;
                }
                None => x[i] = xb,
            }
        }
        t = t_new;

        for i in 0..n {
            s[i] = if alive[i] { t } else { t_hit[i] };
            y[i] = x[i] + s[i] * eta[i];
        }
        solver.solve(w, &s, &y, t, &mut psi)?;

        if full {
            rec.increments.push(db.clone());
        }
        if full || landed_probe || n_alive == 0 {
            rec.grid.push(t);
            rec.x.push(x.clone());
            rec.y.push(y.clone());
            rec.psi.push(psi.clone());
        }
    }
    rec.t_hit = t_hit;
    Ok(rec)
}

/// `beta^(k) = 1/(2 T^(k))` over `n_samples` replicas seeded from `config.seed`.
pub fn sample_beta(
    params: &NuParams<f64>,
    n_samples: usize,
    config: &SdeConfig,
    workers: Option<usize>,
) -> Result<Vec<PotentialVector<f64>>, SdeError> {
    let cfg = SdeConfig {
        record: RecordMode::HitTimes,
        ..config.clone()
    };
    cfg.validate()?;
    run_replicas(Streams::new(cfg.seed), n_samples, workers, |_, rng| {
        simulate(params, &cfg, rng)?.beta()
    })
    .into_iter()
    .collect()
}

/// `lim psi(t) = H^{-1}_{1/(2T)} eta`, from the recorded hitting times.
pub fn psi_limit(record: &PathRecord, params: &NuParams<f64>) -> Result<Vec<f64>, SdeError> {
    let t = record.hit_times()?;
    let h_inv = params.network().h_inverse_extended(&t)?;
    Ok(h_inv.mul_vec(params.eta()))
}

/// Empirical quadratic covariation of `psi` on the grid up to `at` against
/// `H^{-1}_{1/(2(t∧T))}` at the same time.
#[derive(Debug, Clone, PartialEq)]
pub struct QvReport {
    /// Last grid time `<= at`, where both sides are evaluated.
    pub t: f64,
    pub empirical: Matrix<f64>,
    pub expected: Matrix<f64>,
    pub max_deviation: f64,
}

pub fn quadratic_variation_residual(
    record: &PathRecord,
    params: &NuParams<f64>,
    at: f64,
) -> Result<QvReport, SdeError> {
    if !record.is_complete() {
        return Err(SdeError::IncompleteRecord);
    }
    let n = record.n();
    let last = record.grid.partition_point(|&g| g <= at).saturating_sub(1);
    let mut qv = Matrix::zeros(n, n);
    let mut d = vec![0.0; n];
    for k in 0..last {
        for i in 0..n {
            d[i] = record.psi[k + 1][i] - record.psi[k][i];
        }
        for i in 0..n {
            for j in 0..n {
                qv[(i, j)] += d[i] * d[j];
            }
        }
    }
    let t = record.grid[last];
    let s = TimeVector::new(record.t_hit.iter().map(|&th| th.min(t)).collect())?;
    let expected = params.network().h_inverse_extended(&s)?;
    let max_deviation = qv.max_abs_diff(&expected);
    Ok(QvReport {
        t,
        empirical: qv,
        expected,
        max_deviation,
    })
}

/// Parameters of the conditional law of a path shifted by per-coordinate times.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedState {
    /// `t0 ∧ T`.
    pub clamped: TimeVector<f64>,
    pub deformed: DeformedParams<f64>,
    /// `X(t0)`, zero off the surviving set.
    pub x0: Vec<f64>,
    /// `{i : T_i > t0_i}`.
    pub surviving: Vec<usize>,
}

impl ShiftedState {
    /// `nu` parameters of the residual hitting times on the surviving set;
    /// `None` when nothing survives.
    pub fn residual_params(&self) -> Result<Option<NuParams<f64>>, SdeError> {
        if self.surviving.is_empty() {
            return Ok(None);
        }
        let v = &self.surviving;
        let w = self.deformed.w_tilde.select(v, v);
        // W~ = W + W H^{-1} W is entrywise nonnegative; drop rounding noise.
        let w = Matrix::from_fn(v.len(), v.len(), |i, j| w[(i, j)].max(0.0));
        let net = crate::Network::from_matrix_allow_disconnected(w)?;
        let theta = v.iter().map(|&i| self.x0[i]).collect();
        let eta = v.iter().map(|&i| self.deformed.eta_tilde[i]).collect();
        Ok(Some(NuParams::new(net, theta, eta)?))
    }
}

/// Shift at per-coordinate times `t0`, each of which must be a grid point
/// of the record unless it is past the coordinate's hitting time.
pub fn shift_state(record: &PathRecord, t0: &TimeVector<f64>, params: &NuParams<f64>) -> Result<ShiftedState, SdeError> {
    let n = record.n();
    if t0.len() != n {
        return Err(NetworkError::LengthMismatch {
            expected: n,
            got: t0.len(),
        }
        .into());
    }
    let horizon = record.horizon();
    let mut x0 = vec![0.0; n];
    for (i, &ti) in t0.as_slice().iter().enumerate() {
        if ti > horizon && ti < record.t_hit[i] {
            return Err(SdeError::BeyondHorizon {
                vertex: i,
                t0: ti,
                horizon,
            });
        }
        x0[i] = record.x_at(i, ti)?;
    }
    finish_shift(record, t0.as_slice(), x0, params)
}

fn finish_shift(record: &PathRecord, t0: &[f64], x0: Vec<f64>, params: &NuParams<f64>) -> Result<ShiftedState, SdeError> {
    let clamped = TimeVector::new(t0.iter().zip(&record.t_hit).map(|(&a, &b)| a.min(b)).collect())?;
    let deformed = params.network().deform_parameters(params.eta(), &clamped)?;
    let surviving = (0..record.n()).filter(|&i| record.t_hit[i] > t0[i]).collect();
    Ok(ShiftedState {
        clamped,
        deformed,
        x0,
        surviving,
    })
}

/// Per-vertex stopping rules measurable with respect to each coordinate's past.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StoppingRule {
    FixedTimes(Vec<f64>),
    /// First grid time with `X_i <= level_i`.
    LevelCrossing(Vec<f64>),
}

pub fn shift_at_multistopping(
    record: &PathRecord,
    rule: &StoppingRule,
    params: &NuParams<f64>,
) -> Result<ShiftedState, SdeError> {
    match rule {
        StoppingRule::FixedTimes(t) => shift_state(record, &TimeVector::new(t.clone())?, params),
        StoppingRule::LevelCrossing(levels) => {
            let n = record.n();
            if levels.len() != n {
                return Err(NetworkError::LengthMismatch {
                    expected: n,
                    got: levels.len(),
                }
                .into());
            }
            let mut t0 = vec![0.0; n];
            let mut x0 = vec![0.0; n];
            for i in 0..n {
                let k = record
                    .x
                    .iter()
                    .position(|row| row[i] <= levels[i])
                    .ok_or(SdeError::RuleNeverTriggered { vertex: i })?;
                t0[i] = record.grid[k].min(record.t_hit[i]);
                x0[i] = record.x[k][i];
            }
            finish_shift(record, &t0, x0, params)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Network;

    fn one_vertex(eta: f64) -> NuParams<f64> {
        NuParams::new(Network::new(1, &[vec![0.0]]).unwrap(), vec![1.0], vec![eta]).unwrap()
    }

    fn edge() -> NuParams<f64> {
        NuParams::new(Network::complete(2, 1.0).unwrap(), vec![1.0, 0.7], vec![0.3, 0.0]).unwrap()
    }

    #[test]
    fn psi_starts_at_theta_and_absorption_holds() {
        let p = edge();
        let rec = simulate(&p, &SdeConfig::default(), &mut Streams::new(1).replica(0)).unwrap();
        assert_eq!(rec.psi[0], p.theta());
        assert_eq!(rec.x[0], p.theta());
        assert!(rec.is_complete());
        assert!(rec.absorption_holds());
        assert_eq!(rec.increments.len() + 1, rec.grid.len());
    }

    #[test]
    fn psi_limit_matches_final_psi() {
        let p = edge();
        for r in 0..20 {
            let rec = simulate(&p, &SdeConfig::default(), &mut Streams::new(2).replica(r)).unwrap();
            let lim = psi_limit(&rec, &p).unwrap();
            let last = rec.psi.last().unwrap();
            for (a, b) in lim.iter().zip(last) {
                assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn psi_limit_trivial_cases() {
        let p = one_vertex(1.0);
        let rec = simulate(&p, &SdeConfig::default(), &mut Streams::new(3).replica(0)).unwrap();
        assert!((psi_limit(&rec, &p).unwrap()[0] - rec.t_hit[0]).abs() < 1e-12);
        let p0 = NuParams::without_eta(Network::complete(3, 1.0).unwrap(), vec![1.0; 3]).unwrap();
        let rec = simulate(&p0, &SdeConfig::default(), &mut Streams::new(3).replica(1)).unwrap();
        assert_eq!(psi_limit(&rec, &p0).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn one_vertex_qv_is_stopped_time() {
        let p = one_vertex(0.0);
        let rec = simulate(&p, &SdeConfig::default(), &mut Streams::new(4).replica(0)).unwrap();
        let at0 = quadratic_variation_residual(&rec, &p, 0.0).unwrap();
        assert_eq!(at0.max_deviation, 0.0);
        let late = quadratic_variation_residual(&rec, &p, f64::INFINITY).unwrap();
        assert!((late.expected[(0, 0)] - rec.t_hit[0]).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_path() {
        let p = edge();
        let c = SdeConfig::default();
        let a = simulate(&p, &c, &mut Streams::new(9).replica(5)).unwrap();
        let b = simulate(&p, &c, &mut Streams::new(9).replica(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn probes_are_landed_exactly() {
        let p = edge();
        let c = SdeConfig {
            probe_times: vec![0.1, 0.3],
            record: RecordMode::Probes,
            ..SdeConfig::default()
        };
        let rec = simulate(&p, &c, &mut Streams::new(5).replica(0)).unwrap();
        for &pt in &c.probe_times {
            if pt < rec.horizon() {
                assert!(rec.grid.contains(&pt));
            }
        }
    }

    #[test]
    fn zero_shift_recovers_parameters() {
        let p = edge();
        let rec = simulate(&p, &SdeConfig::default(), &mut Streams::new(6).replica(0)).unwrap();
        let sh = shift_state(&rec, &TimeVector::zeros(2), &p).unwrap();
        assert_eq!(sh.x0, p.theta());
        assert_eq!(sh.surviving, vec![0, 1]);
        assert!(sh.deformed.w_tilde.max_abs_diff(p.network().weights()) < 1e-15);
        assert_eq!(sh.deformed.eta_tilde, p.eta());
        let same = shift_at_multistopping(&rec, &StoppingRule::LevelCrossing(p.theta().to_vec()), &p).unwrap();
        assert_eq!(same, sh);
        let past = shift_state(&rec, &TimeVector::new(rec.t_hit.clone()).unwrap(), &p).unwrap();
        assert!(past.surviving.is_empty());
        assert_eq!(past.x0, vec![0.0, 0.0]);
        assert!(past.residual_params().unwrap().is_none());
    }

    #[test]
    fn config_rejects_bad_values() {
        let bad = SdeConfig { dt: 0.0, ..SdeConfig::default() };
        assert!(matches!(bad.validate(), Err(SdeError::InvalidConfig(_))));
        let tight = SdeConfig { t_max: Some(1e-3), ..SdeConfig::default() };
        let err = simulate(&one_vertex(0.0), &tight, &mut Streams::new(1).replica(0)).unwrap_err();
        assert!(matches!(err, SdeError::HorizonExceeded { .. }));
    }
}
