//! Vertex reinforced jump process in its exchangeable time scale, the Markov
//! jump processes it mixes, and the map from a potential to their rates.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Matrix, SymmetricFactor};
use crate::network::{ConductanceNetwork, PotentialVector};
use crate::nu::{NuError, NuParams};
use crate::rng::StreamRng;
use crate::scalar::Real;
use crate::Network;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VrjpError {
    #[error("jump processes need a zero diagonal (W[{0}][{0}] != 0)")]
    NonzeroDiagonal(usize),
    #[error("start vertex {0} has no neighbours")]
    IsolatedStart(usize),
    #[error("start vertex {0} out of range")]
    InvalidVertex(usize),
    #[error("initial local times must be positive")]
    NonpositiveTheta,
    #[error("psi must be entrywise positive")]
    NonpositivePsi,
    #[error("(H_beta) restricted to V minus the start vertex is not positive definite")]
    BlockNotPD,
    #[error("horizon must be positive and finite")]
    InvalidHorizon,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Params(#[from] NuError),
}

/// One trajectory up to the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VrjpRecord {
    pub t_max: f64,
    pub jump_times: Vec<f64>,
    /// `visited[0]` is the start; `visited[k]` is entered at `jump_times[k-1]`.
    pub visited: Vec<usize>,
    pub local_times: Vec<f64>,
    /// Visits per vertex, the initial one included.
    pub jump_counts: Vec<u64>,
}

impl VrjpRecord {
    fn start(n: usize, delta: usize, t_max: f64) -> Self {
        let mut jump_counts = vec![0; n];
        jump_counts[delta] = 1;
        Self {
            t_max,
            jump_times: Vec::new(),
            visited: vec![delta],
            local_times: vec![0.0; n],
            jump_counts,
        }
    }

    fn jump(&mut self, t: f64, to: usize) {
        self.jump_times.push(t);
        self.visited.push(to);
        self.jump_counts[to] += 1;
    }

    /// `sum_i l_i = t_max` and counts agree with the visit sequence.
    pub fn invariants_hold(&self, tol: f64) -> bool {
        let total: f64 = self.local_times.iter().sum();
        let mut counts = vec![0u64; self.local_times.len()];
        for &v in &self.visited {
            counts[v] += 1;
        }
        (total - self.t_max).abs() <= tol * self.t_max.max(1.0)
            && counts == self.jump_counts
            && self.jump_times.windows(2).all(|w| w[0] <= w[1])
            && self.visited.len() == self.jump_times.len() + 1
    }

    pub fn occupation_fractions(&self) -> Vec<f64> {
        self.local_times.iter().map(|l| l / self.t_max).collect()
    }
}

fn check_network(net: &Network, delta: usize) -> Result<(), VrjpError> {
    let n = net.n();
    if delta >= n {
        return Err(VrjpError::InvalidVertex(delta));
    }
    if let Some(i) = (0..n).find(|&i| net.weight(i, i) != 0.0) {
        return Err(VrjpError::NonzeroDiagonal(i));
    }
    if net.neighbors(delta).next().is_none() {
        return Err(VrjpError::IsolatedStart(delta));
    }
    Ok(())
}

/// Exact simulation with rates `W_ij sqrt(theta_j + l_j) / (2 sqrt(theta_i + l_i))`.
/// Only the current vertex's local time moves, so the integrated rate
/// `A(sqrt(c + s) - sqrt(c))`, `A = sum_j W_ij sqrt(theta_j + l_j)`, inverts
/// in closed form.
pub fn vrjp_simulate(
    net: &Network,
    theta: &[f64],
    delta: usize,
    t_max: f64,
    rng: &mut StreamRng,
) -> Result<VrjpRecord, VrjpError> {
    check_network(net, delta)?;
    let n = net.n();
    if theta.len() != n {
        return Err(VrjpError::LengthMismatch {
            expected: n,
            got: theta.len(),
        });
    }
    if theta.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(VrjpError::NonpositiveTheta);
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(VrjpError::InvalidHorizon);
    }
    let w = net.weights();
    let mut rec = VrjpRecord::start(n, delta, t_max);
    let mut weights = vec![0.0; n];
    let mut t = 0.0;
    let mut at = delta;
    loop {
        let mut a = 0.0;
        for j in 0..n {
            weights[j] = w[(at, j)] * (theta[j] + rec.local_times[j]).sqrt();
            a += weights[j];
        }
        let c = theta[at] + rec.local_times[at];
        let e: f64 = rng.sample(Exp1);
        let root = c.sqrt() + e / a;
        let s = root * root - c;
        if t + s >= t_max {
            rec.local_times[at] += t_max - t;
            return Ok(rec);
        }
        rec.local_times[at] += s;
        t += s;
        at = pick(&weights, a, rng);
        rec.jump(t, at);
    }
}

/// Continuous-time chain with constant rates `W_ij psi_j / (2 psi_i)`.
pub fn markov_jump_simulate(
    net: &Network,
    psi: &[f64],
    delta: usize,
    t_max: f64,
    rng: &mut StreamRng,
) -> Result<VrjpRecord, VrjpError> {
    check_network(net, delta)?;
    let n = net.n();
    if psi.len() != n {
        return Err(VrjpError::LengthMismatch {
            expected: n,
            got: psi.len(),
        });
    }
    if psi.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(VrjpError::NonpositivePsi);
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(VrjpError::InvalidHorizon);
    }
    let w = net.weights();
    let rates = Matrix::from_fn(n, n, |i, j| 0.5 * w[(i, j)] * psi[j] / psi[i]);
    let totals: Vec<f64> = (0..n).map(|i| rates.row(i).iter().sum()).collect();
    let mut rec = VrjpRecord::start(n, delta, t_max);
    let mut t = 0.0;
    let mut at = delta;
    loop {
        let e: f64 = rng.sample(Exp1);
        let s = e / totals[at];
        if t + s >= t_max {
            rec.local_times[at] += t_max - t;
            return Ok(rec);
        }
        rec.local_times[at] += s;
        t += s;
        at = pick(rates.row(at), totals[at], rng);
        rec.jump(t, at);
    }
}

fn pick(weights: &[f64], total: f64, rng: &mut StreamRng) -> usize {
    let mut u: f64 = rng.random::<f64>() * total;
    let mut last = 0;
    for (j, &wj) in weights.iter().enumerate() {
        if wj > 0.0 {
            if u < wj {
                return j;
            }
            u -= wj;
            last = j;
        }
    }
    last
}

/// `psi_delta = 1`, `(H_beta psi)_U = 0` on `U = V \ {delta}`; `beta_delta`
/// is not used.
pub fn psi_from_beta<T: Real>(
    net: &ConductanceNetwork<T>,
    beta: &PotentialVector<T>,
    delta: usize,
) -> Result<Vec<T>, VrjpError> {
    let n = net.n();
    if delta >= n {
        return Err(VrjpError::InvalidVertex(delta));
    }
    if beta.len() != n {
        return Err(VrjpError::LengthMismatch {
            expected: n,
            got: beta.len(),
        });
    }
    let u: Vec<usize> = (0..n).filter(|&i| i != delta).collect();
    let h = net.h_operator(beta).select(&u, &u);
    let factor = SymmetricFactor::new(&h).map_err(|_| VrjpError::BlockNotPD)?;
    let rhs: Vec<T> = u.iter().map(|&i| net.weight(i, delta)).collect();
    let psi_u = factor.solve(&rhs);
    let mut psi = vec![T::one(); n];
    for (k, &i) in u.iter().enumerate() {
        psi[i] = psi_u[k];
    }
    Ok(psi)
}

/// `N_i / l_i`; `None` where the vertex was never visited.
pub fn empirical_beta(record: &VrjpRecord) -> Vec<Option<f64>> {
    record
        .jump_counts
        .iter()
        .zip(&record.local_times)
        .map(|(&c, &l)| (c > 0 && l > 0.0).then(|| c as f64 / l))
        .collect()
}

/// Parameters of the law of `beta_U`: `(W_UU, theta_U, W_{U,delta} theta_delta)`.
pub fn mixing_params(net: &Network, theta: &[f64], delta: usize) -> Result<NuParams<f64>, VrjpError> {
    let n = net.n();
    if delta >= n {
        return Err(VrjpError::InvalidVertex(delta));
    }
    let u: Vec<usize> = (0..n).filter(|&i| i != delta).collect();
    let sub = Network::from_matrix_allow_disconnected(net.weights().select(&u, &u)).map_err(NuError::from)?;
    let theta_u = u.iter().map(|&i| theta[i]).collect();
    let eta = u.iter().map(|&i| net.weight(i, delta) * theta[delta]).collect();
    Ok(NuParams::new(sub, theta_u, eta)?)
}

/// Embeds `beta_U` into a full-length potential (the `delta` slot is unused
/// by [`psi_from_beta`] and set to 0).
pub fn embed_beta(beta_u: &[f64], delta: usize) -> PotentialVector<f64> {
    let mut b = beta_u.to_vec();
    b.insert(delta, 0.0);
    PotentialVector::new(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Streams;

    #[test]
    fn psi_on_an_edge() {
        let net = Network::complete(2, 1.0).unwrap();
        let psi = psi_from_beta(&net, &PotentialVector::new(vec![7.0, 1.0]), 0).unwrap();
        assert_eq!(psi, vec![1.0, 0.5]);
    }

    #[test]
    fn records_satisfy_invariants() {
        let net = Network::complete(3, 1.0).unwrap();
        let mut rng = Streams::new(1).replica(0);
        let r = vrjp_simulate(&net, &[1.0, 1.0, 1.0], 0, 50.0, &mut rng).unwrap();
        assert!(r.invariants_hold(1e-12));
        let m = markov_jump_simulate(&net, &[1.0, 2.0, 0.5], 0, 50.0, &mut rng).unwrap();
        assert!(m.invariants_hold(1e-12));
    }

    #[test]
    fn symmetric_edge_alternates() {
        let net = Network::complete(2, 1.0).unwrap();
        let r = markov_jump_simulate(&net, &[1.0, 1.0], 1, 30.0, &mut Streams::new(2).replica(0)).unwrap();
        assert!(r.visited.windows(2).all(|w| w[0] != w[1]));
        assert_eq!(r.visited[0], 1);
    }

    #[test]
    fn empirical_beta_flags_unvisited() {
        let rec = VrjpRecord {
            t_max: 5.0,
            jump_times: vec![],
            visited: vec![0],
            local_times: vec![5.0, 0.0],
            jump_counts: vec![10, 0],
        };
        assert_eq!(empirical_beta(&rec), vec![Some(2.0), None]);
    }

    #[test]
    fn errors() {
        let looped = Network::new(2, &[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let mut rng = Streams::new(3).replica(0);
        assert_eq!(
            vrjp_simulate(&looped, &[1.0, 1.0], 0, 1.0, &mut rng).unwrap_err(),
            VrjpError::NonzeroDiagonal(0)
        );
        let net = Network::complete(2, 1.0).unwrap();
        assert_eq!(
            markov_jump_simulate(&net, &[1.0, 0.0], 0, 1.0, &mut rng).unwrap_err(),
            VrjpError::NonpositivePsi
        );
        assert_eq!(
            psi_from_beta(&net, &PotentialVector::new(vec![1.0, 0.0]), 0).unwrap_err(),
            VrjpError::BlockNotPD
        );
        let one = Network::new(1, &[vec![0.0]]).unwrap();
        assert_eq!(
            vrjp_simulate(&one, &[1.0], 0, 1.0, &mut rng).unwrap_err(),
            VrjpError::IsolatedStart(0)
        );
    }
}
