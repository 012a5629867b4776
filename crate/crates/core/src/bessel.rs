//! 3-dimensional Bessel bridges from `theta` to 0: the explicit transition
//! kernel, an exact grid sampler, and the mixture over hitting times.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::nu::NuParams;
use crate::rng::{run_replicas, StreamRng, Streams};
use crate::scalar::Real;
use crate::sde::{simulate, RecordMode, SdeConfig, SdeError};
use crate::stats::normal_cdf;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BesselError {
    #[error("bridge needs theta > 0 and t_end > 0")]
    InvalidParams,
    #[error("time {0} is outside the open interval (0, T)")]
    TimeOutOfRange(f64),
    #[error("grid must be increasing and inside [0, T]")]
    GridOutOfRange,
    #[error("one grid per vertex expected: got {got}, need {expected}")]
    GridCount { expected: usize, got: usize },
    #[error(transparent)]
    Sde(#[from] SdeError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeParams<T> {
    pub theta: T,
    pub t_end: T,
}

impl<T: Real> BridgeParams<T> {
    pub fn new(theta: T, t_end: T) -> Result<Self, BesselError> {
        if !(theta > T::zero() && t_end > T::zero() && theta.is_finite() && t_end.is_finite()) {
            return Err(BesselError::InvalidParams);
        }
        Ok(Self { theta, t_end })
    }
}

/// Density of `X(t)` at `y` for the bridge from `theta` to 0 on `[0, T]`.
pub fn bridge_density<T: Real>(p: &BridgeParams<T>, t: T, y: T) -> Result<T, BesselError> {
    let (theta, big_t) = (p.theta, p.t_end);
    if !(t > T::zero() && t < big_t) {
        return Err(BesselError::TimeOutOfRange(t.to_f64_lossy()));
    }
    if y <= T::zero() {
        return Ok(T::zero());
    }
    let two = T::lit(2.0);
    let rest = big_t - t;
    let prefactor = y / theta / (two * T::PI() * t).sqrt() * (big_t / rest).powf(T::lit(1.5));
    // e^{a}(e^{-(y-θ)²/2t} - e^{-(y+θ)²/2t}) = e^{a - (y-θ)²/2t}(1 - e^{-2yθ/t})
    let d = y - theta;
    let exponent = -y * y / (two * rest) + theta * theta / (two * big_t) - d * d / (two * t);
    let gap = -(-two * y * theta / t).exp_m1();
    Ok(prefactor * exponent.exp() * gap)
}

/// CDF of `X(t)`. The bridge at time `t` is the norm of a Gaussian vector
/// with mean `(m, 0, 0)`, `m = theta (T - t)/T`, and covariance
/// `sigma^2 I`, `sigma^2 = t (T - t)/T`, which integrates in closed form.
pub fn bridge_cdf(p: &BridgeParams<f64>, t: f64, y: f64) -> Result<f64, BesselError> {
    if !(t > 0.0 && t < p.t_end) {
        return Err(BesselError::TimeOutOfRange(t));
    }
    if y <= 0.0 {
        return Ok(0.0);
    }
    let m = p.theta * (p.t_end - t) / p.t_end;
    let sigma = (t * (p.t_end - t) / p.t_end).sqrt();
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let (a, b) = ((y - m) / sigma, (y + m) / sigma);
    let v = normal_cdf(a) + normal_cdf(b) - 1.0 + sigma / m * (phi(b) - phi(a));
    Ok(v.clamp(0.0, 1.0))
}

/// A sampled bridge, keeping the three Cartesian components so the grid can
/// be refined later without resampling.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgePath {
    pub params: BridgeParams<f64>,
    pub grid: Vec<f64>,
    pub components: Vec<[f64; 3]>,
}

impl BridgePath {
    pub fn norms(&self) -> Vec<f64> {
        self.components.iter().map(norm).collect()
    }

    /// Value at any `t >= 0` on the grid; 0 from `T` on.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        if t >= self.params.t_end {
            return Some(0.0);
        }
        let k = self.grid.iter().position(|&g| g == t)?;
        Some(norm(&self.components[k]))
    }

    /// Inserts `t` by sampling the Brownian bridge between its grid neighbours.
    pub fn refine(&mut self, t: f64, rng: &mut StreamRng) -> Result<(), BesselError> {
        let k = self.grid.partition_point(|&g| g < t);
        if k == 0 || k >= self.grid.len() || !(t < self.params.t_end) {
            return Err(BesselError::GridOutOfRange);
        }
        if self.grid[k] == t {
            return Ok(());
        }
        let (a, b) = (self.grid[k - 1], self.grid[k]);
        let c = bridge_step(&self.components[k - 1], &self.components[k], a, t, b, rng);
        self.grid.insert(k, t);
        self.components.insert(k, c);
        Ok(())
    }
}

fn norm(c: &[f64; 3]) -> f64 {
    (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
}

/// Brownian bridge from `xa` at `a` to `xb` at `b`, evaluated at `t`.
fn bridge_step(xa: &[f64; 3], xb: &[f64; 3], a: f64, t: f64, b: f64, rng: &mut StreamRng) -> [f64; 3] {
    let w = (t - a) / (b - a);
    let sd = ((t - a) * (b - t) / (b - a)).sqrt();
    let mut out = [0.0; 3];
    for d in 0..3 {
        let z: f64 = rng.sample(StandardNormal);
        out[d] = xa[d] + w * (xb[d] - xa[d]) + sd * z;
    }
    out
}

/// Norm of a 3-D Brownian bridge from `(theta, 0, 0)` to the origin,
/// sampled exactly on `grid` by sequential conditioning.
pub fn sample_bridge(p: &BridgeParams<f64>, grid: &[f64], rng: &mut StreamRng) -> Result<BridgePath, BesselError> {
    let t_end = p.t_end;
    if grid.iter().any(|&g| !(0.0..=t_end).contains(&g)) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BesselError::GridOutOfRange);
    }
    let end = [0.0; 3];
    let mut prev_t = 0.0;
    let mut prev = [p.theta, 0.0, 0.0];
    let mut components = Vec::with_capacity(grid.len());
    for &t in grid {
        let c = if t == 0.0 {
            prev
        } else if t == t_end {
            end
        } else {
            bridge_step(&prev, &end, prev_t, t, t_end, rng)
        };
        components.push(c);
        prev = c;
        prev_t = t;
    }
    Ok(BridgePath {
        params: *p,
        grid: grid.to_vec(),
        components,
    })
}

/// One draw from the mixture law: hitting times, then an independent bridge
/// per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureBundle {
    pub t_hit: Vec<f64>,
    /// `paths[i][k]` is vertex `i` at `grid_per_vertex[i][k]`, zero past `T_i`.
    pub paths: Vec<Vec<f64>>,
}

/// Draws `T` from the S.D.E. and then independent Bessel bridges on
/// `[0, T_i]`, evaluated on each vertex's grid. Replica `k` uses stream `k`
/// of `config.seed`.
pub fn sample_mixture(
    params: &NuParams<f64>,
    n_samples: usize,
    grid_per_vertex: &[Vec<f64>],
    config: &SdeConfig,
    workers: Option<usize>,
) -> Result<Vec<MixtureBundle>, BesselError> {
    let n = params.n();
    if grid_per_vertex.len() != n {
        return Err(BesselError::GridCount {
            expected: n,
            got: grid_per_vertex.len(),
        });
    }
    let cfg = SdeConfig {
        record: RecordMode::HitTimes,
        ..config.clone()
    };
    run_replicas(Streams::new(cfg.seed), n_samples, workers, |_, rng| {
        let t_hit = simulate(params, &cfg, rng)?.t_hit;
        let mut paths = Vec::with_capacity(n);
        for i in 0..n {
            let bp = BridgeParams::new(params.theta()[i], t_hit[i])?;
            let inside: Vec<f64> = grid_per_vertex[i].iter().copied().filter(|&g| g <= t_hit[i]).collect();
            let mut values = sample_bridge(&bp, &inside, rng)?.norms();
            values.resize(grid_per_vertex[i].len(), 0.0);
            paths.push(values);
        }
        Ok(MixtureBundle { t_hit, paths })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_reference_value() {
        let p = BridgeParams::new(1.0, 1.0).unwrap();
        let expected = 2f64.powf(1.5) / std::f64::consts::PI.sqrt() * (-0.5f64).exp() * (1.0 - (-4.0f64).exp());
        let got = bridge_density(&p, 0.5, 1.0).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!((got - 0.9502).abs() < 1e-4);
        assert_eq!(bridge_density(&p, 0.5, 0.0).unwrap(), 0.0);
        assert!(matches!(bridge_density(&p, 1.0, 0.3), Err(BesselError::TimeOutOfRange(_))));
    }

    #[test]
    fn density_is_generic() {
        let p32 = BridgeParams::new(1.0f32, 1.0).unwrap();
        let p64 = BridgeParams::new(1.0f64, 1.0).unwrap();
        let a = bridge_density(&p32, 0.3, 0.7).unwrap() as f64;
        let b = bridge_density(&p64, 0.3, 0.7).unwrap();
        assert!((a - b).abs() < 1e-5);
    }

    #[test]
    fn bridge_endpoints_and_sign() {
        let p = BridgeParams::new(1.3, 2.0).unwrap();
        let grid: Vec<f64> = (0..=20).map(|k| 0.1 * k as f64).collect();
        let path = sample_bridge(&p, &grid, &mut Streams::new(1).replica(0)).unwrap();
        let v = path.norms();
        assert_eq!(v[0], 1.3);
        assert_eq!(*v.last().unwrap(), 0.0);
        assert!(v.iter().all(|&x| x >= 0.0));
        assert_eq!(path.value_at(5.0), Some(0.0));
        assert!(sample_bridge(&p, &[0.0, 3.0], &mut Streams::new(1).replica(0)).is_err());
    }

    #[test]
    fn refinement_keeps_existing_points() {
        let p = BridgeParams::new(1.0, 1.0).unwrap();
        let mut rng = Streams::new(2).replica(0);
        let mut path = sample_bridge(&p, &[0.0, 0.5, 1.0], &mut rng).unwrap();
        let before = path.norms();
        path.refine(0.25, &mut rng).unwrap();
        let after = path.norms();
        assert_eq!(path.grid, vec![0.0, 0.25, 0.5, 1.0]);
        assert_eq!((after[0], after[2], after[3]), (before[0], before[1], before[2]));
    }
}
