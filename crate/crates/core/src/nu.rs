//! The multivariate law `nu_V^{W,theta,eta}` of the random potential.
//!
//! Density on `{beta : H_beta > 0}`:
//!
//! ```text
//! (2/pi)^{|V|/2} exp(-<theta,H theta>/2 - <eta,H^{-1} eta>/2 + <eta,theta>) prod(theta) / sqrt(det H)
//! ```

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, Matrix, SymmetricFactor};
use crate::network::{ConductanceNetwork, NetworkError, PotentialVector, TimeVector};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NuError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("theta must be strictly positive (entry {0})")]
    NonPositiveTheta(usize),
    #[error("eta must be nonnegative (entry {0})")]
    NegativeEta(usize),
    #[error("{name} has length {got}, expected {expected}")]
    LengthMismatch {
        name: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("lambda_{0} + theta_{0}^2 must be positive")]
    DomainViolation(usize),
    #[error("vertex {0}: eta_i + sum_j W_ij theta_j = 0, the marginal is an inverse Gamma law")]
    ZeroDriftDenominator(usize),
    #[error("vertex subset must be nonempty")]
    EmptySubset,
    #[error("vertex subset contains an invalid or repeated vertex {0}")]
    InvalidVertex(usize),
    #[error("restriction to the subset is disconnected")]
    DisconnectedRestriction,
    #[error("(H_beta)_{{U,U}} is not positive definite at the conditioning values")]
    ConditioningOutOfSupport,
    #[error("beta is outside the support (H_beta not positive definite)")]
    OutOfSupport,
    #[error("lambda must be nonnegative (entry {0})")]
    NegativeLambda(usize),
}

/// `(network, theta, eta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawParams<T>",
    into = "RawParams<T>",
    bound(serialize = "T: Real + Serialize", deserialize = "T: Real + DeserializeOwned")
)]
pub struct NuParams<T: Real> {
    network: ConductanceNetwork<T>,
    theta: Vec<T>,
    eta: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + DeserializeOwned"))]
struct RawParams<T: Real> {
    network: ConductanceNetwork<T>,
    theta: Vec<T>,
    eta: Vec<T>,
}

impl<T: Real> TryFrom<RawParams<T>> for NuParams<T> {
    type Error = NuError;

    fn try_from(raw: RawParams<T>) -> Result<Self, NuError> {
        Self::new(raw.network, raw.theta, raw.eta)
    }
}

impl<T: Real> From<NuParams<T>> for RawParams<T> {
    fn from(p: NuParams<T>) -> Self {
        RawParams {
            network: p.network,
            theta: p.theta,
            eta: p.eta,
        }
    }
}

impl<T: Real> NuParams<T> {
    pub fn new(network: ConductanceNetwork<T>, theta: Vec<T>, eta: Vec<T>) -> Result<Self, NuError> {
        let n = network.n();
        check_len("theta", n, theta.len())?;
        check_len("eta", n, eta.len())?;
        if let Some(i) = theta.iter().position(|&x| !(x > T::zero()) || !x.is_finite()) {
            return Err(NuError::NonPositiveTheta(i));
        }
        if let Some(i) = eta.iter().position(|&x| !(x >= T::zero()) || !x.is_finite()) {
            return Err(NuError::NegativeEta(i));
        }
        Ok(Self { network, theta, eta })
    }

    /// `eta = 0`.
    pub fn without_eta(network: ConductanceNetwork<T>, theta: Vec<T>) -> Result<Self, NuError> {
        let n = network.n();
        Self::new(network, theta, vec![T::zero(); n])
    }

    pub fn n(&self) -> usize {
        self.network.n()
    }

    pub fn network(&self) -> &ConductanceNetwork<T> {
        &self.network
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn eta(&self) -> &[T] {
        &self.eta
    }

    /// Effective constant drift `eta_i + sum_{j != i} W_ij theta_j` of coordinate `i`.
    pub fn effective_drift(&self, i: usize) -> T {
        let w = self.network.weights();
        let coupling: T = (0..self.n())
            .filter(|&j| j != i)
            .map(|j| w[(i, j)] * self.theta[j])
            .sum();
        self.eta[i] + coupling
    }

    /// Log-density at `beta`; `-inf` outside `{H_beta > 0}`.
    pub fn log_density(&self, beta: &PotentialVector<T>) -> T {
        assert_eq!(beta.len(), self.n(), "beta length mismatch");
        let h = self.network.h_operator(beta);
        let factor = match SymmetricFactor::new(&h) {
            Ok(f) => f,
            Err(_) => return T::neg_infinity(),
        };
        let half = T::lit(0.5);
        let n = T::lit(self.n() as f64);
        let h_inv_eta = factor.solve(&self.eta);
        half * n * (T::lit(2.0) / T::PI()).ln() - half * h.quad_form(&self.theta, &self.theta)
            - half * dot(&self.eta, &h_inv_eta)
            + dot(&self.eta, &self.theta)
            + self.theta.iter().map(|t| t.ln()).sum::<T>()
            - half * factor.log_det()
    }

    /// `E[exp(-<lambda, beta>)]` in closed form.
    pub fn laplace_transform(&self, lambda: &[T]) -> Result<T, NuError> {
        check_len("lambda", self.n(), lambda.len())?;
        let mut root = Vec::with_capacity(self.n());
        for (i, (&l, &t)) in lambda.iter().zip(&self.theta).enumerate() {
            let s = t * t + l;
            if !(s > T::zero()) {
                return Err(NuError::DomainViolation(i));
            }
            root.push(s.sqrt());
        }
        let w = self.network.weights();
        let half = T::lit(0.5);
        let diff: Vec<T> = self.theta.iter().zip(&root).map(|(&t, &r)| t - r).collect();
        let exponent = -half * w.quad_form(&root, &root) + half * w.quad_form(&self.theta, &self.theta)
            + dot(&self.eta, &diff);
        let prod = self
            .theta
            .iter()
            .zip(&root)
            .fold(T::one(), |p, (&t, &r)| p * t / r);
        Ok(exponent.exp() * prod)
    }

    /// Mean and shape of the inverse Gaussian law of `1/(2 beta_i - W_ii)`.
    pub fn marginal_ig_params(&self, i: usize) -> Result<(T, T), NuError> {
        if i >= self.n() {
            return Err(NuError::InvalidVertex(i));
        }
        let d = self.effective_drift(i);
        if !(d > T::zero()) {
            return Err(NuError::ZeroDriftDenominator(i));
        }
        Ok((self.theta[i] / d, self.theta[i] * self.theta[i]))
    }

    /// Law of `beta_U`: `(W_UU, theta_U, eta_U + W_{U,U^c} theta_{U^c})`.
    pub fn restricted_params(&self, u: &[usize]) -> Result<Self, NuError> {
        self.restricted_params_with(u, false)
    }

    pub fn restricted_params_with(&self, u: &[usize], allow_disconnected: bool) -> Result<Self, NuError> {
        let complement = self.complement(u)?;
        if !allow_disconnected && !self.network.is_connected_subset(u) {
            return Err(NuError::DisconnectedRestriction);
        }
        let w = self.network.weights();
        let eta_hat: Vec<T> = u
            .iter()
            .map(|&i| self.eta[i] + complement.iter().map(|&j| w[(i, j)] * self.theta[j]).sum::<T>())
            .collect();
        let sub = self.network.induced_weights(u);
        let network = if allow_disconnected {
            ConductanceNetwork::from_matrix_allow_disconnected(sub)?
        } else {
            ConductanceNetwork::from_matrix(sub)?
        };
        Self::new(network, pick(&self.theta, u), eta_hat)
    }

    /// Law of `beta_{U^c}` given `beta_U`.
    pub fn conditional_params(&self, u: &[usize], beta_u: &[T]) -> Result<Self, NuError> {
        let complement = self.complement(u)?;
        check_len("beta_u", u.len(), beta_u.len())?;
        if complement.is_empty() {
            return Err(NuError::EmptySubset);
        }
        let w = self.network.weights();
        let two = T::lit(2.0);
        let h_uu = Matrix::from_fn(u.len(), u.len(), |a, b| {
            let diag = if a == b { two * beta_u[a] } else { T::zero() };
            diag - w[(u[a], u[b])]
        });
        let factor = SymmetricFactor::new(&h_uu).map_err(|_| NuError::ConditioningOutOfSupport)?;
        let h_inv = factor.inverse();
        let w_cu = w.select(&complement, u);
        let w_uc = w.select(u, &complement);
        let w_check = w
            .select(&complement, &complement)
            .add(&w_cu.matmul(&h_inv).matmul(&w_uc))
            .symmetrized();
        let eta_u = pick(&self.eta, u);
        let eta_check: Vec<T> = w_cu
            .mul_vec(&h_inv.mul_vec(&eta_u))
            .into_iter()
            .zip(complement.iter().map(|&i| self.eta[i]))
            .map(|(a, b)| a + b)
            .collect();
        // W_check is irreducible whenever W is; only entries are validated.
        let network = ConductanceNetwork::from_matrix_allow_disconnected(w_check)?;
        Self::new(network, pick(&self.theta, &complement), eta_check)
    }

    /// `exp(-<eta, H^{-1} lambda> - <lambda, H^{-1} lambda>/2)`; its mean is `exp(-<lambda,theta>)`.
    pub fn functional_identity_integrand(&self, lambda: &[T], beta: &PotentialVector<T>) -> Result<T, NuError> {
        check_len("lambda", self.n(), lambda.len())?;
        if let Some(i) = lambda.iter().position(|&l| !(l >= T::zero())) {
            return Err(NuError::NegativeLambda(i));
        }
        let factor = SymmetricFactor::new(&self.network.h_operator(beta)).map_err(|_| NuError::OutOfSupport)?;
        let h_inv_lambda = factor.solve(lambda);
        let half = T::lit(0.5);
        Ok((-dot(&self.eta, &h_inv_lambda) - half * dot(lambda, &h_inv_lambda)).exp())
    }

    /// Density of the mixture path law against independent stopped
    /// Brownian motions, as a function of the hitting times.
    pub fn radon_nikodym_weight(&self, t_hit: &TimeVector<T>) -> T {
        assert_eq!(t_hit.len(), self.n(), "t_hit length mismatch");
        let t = t_hit.as_slice();
        if t.iter().any(|&x| !(x > T::zero()) || !x.is_finite()) {
            return T::zero();
        }
        let h = self.network.h_operator(&t_hit.half_reciprocal());
        let factor = match SymmetricFactor::new(&h) {
            Ok(f) => f,
            Err(_) => return T::zero(),
        };
        let half = T::lit(0.5);
        // K_T = T H_{1/2T}, so K_T^{-1} T eta = H^{-1} eta and det K_T = prod(T) det H.
        let h_inv_eta = factor.solve(&self.eta);
        let log_det_k = factor.log_det() + t.iter().map(|x| x.ln()).sum::<T>();
        let exponent = half * self.network.weights().quad_form(&self.theta, &self.theta)
            - half * dot(&self.eta, &h_inv_eta)
            + dot(&self.eta, &self.theta)
            - half * log_det_k;
        exponent.exp()
    }

    fn complement(&self, u: &[usize]) -> Result<Vec<usize>, NuError> {
        if u.is_empty() {
            return Err(NuError::EmptySubset);
        }
        let mut member = vec![false; self.n()];
        for &i in u {
            if i >= self.n() || member[i] {
                return Err(NuError::InvalidVertex(i));
            }
            member[i] = true;
        }
        Ok((0..self.n()).filter(|&i| !member[i]).collect())
    }
}

fn pick<T: Copy>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i]).collect()
}

fn check_len(name: &'static str, expected: usize, got: usize) -> Result<(), NuError> {
    if expected == got {
        Ok(())
    } else {
        Err(NuError::LengthMismatch { name, expected, got })
    }
}
