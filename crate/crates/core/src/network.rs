//! Conductance networks and the deterministic operators built on them:
//! `H_beta = 2 beta - W`, `K_t = Id - t W`, the extended inverse
//! `K_t^{-1} t` and the time-shift deformation of `(W, eta)`.

use std::collections::VecDeque;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, LinalgError, Lu, Matrix, SymmetricFactor};
use crate::scalar::Real;

/// Relative tolerance for accepting a weight matrix as symmetric.
pub const SYMMETRY_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("weights must be a {expected}x{expected} matrix")]
    DimensionMismatch { expected: usize },
    #[error("a network needs at least one vertex")]
    Empty,
    #[error("weights must be symmetric: W[{i}][{j}] != W[{j}][{i}]")]
    AsymmetricWeights { i: usize, j: usize },
    #[error("weights must be nonnegative and finite: W[{i}][{j}] is not")]
    NegativeWeight { i: usize, j: usize },
    #[error("the graph of positive off-diagonal weights must be connected (irreducible W)")]
    DisconnectedGraph,
    #[error("time vector entry {0} is infinite where a finite time is required")]
    InfiniteTimeEntry(usize),
    #[error("time vector entries must be nonnegative (entry {0})")]
    NegativeTime(usize),
    #[error("K_t is singular or not positive definite")]
    SingularK,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("vector length {got} does not match vertex count {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Symmetric nonnegative weights on a connected vertex set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawNetwork<T>",
    into = "RawNetwork<T>",
    bound(serialize = "T: Real + Serialize", deserialize = "T: Real + DeserializeOwned")
)]
pub struct ConductanceNetwork<T: Real> {
    weights: Matrix<T>,
}

#[derive(Serialize, Deserialize)]
struct RawNetwork<T> {
    n: usize,
    weights: Vec<Vec<T>>,
}

impl<T: Real> TryFrom<RawNetwork<T>> for ConductanceNetwork<T> {
    type Error = NetworkError;

    fn try_from(raw: RawNetwork<T>) -> Result<Self, Self::Error> {
        Self::new(raw.n, &raw.weights)
    }
}

impl<T: Real> From<ConductanceNetwork<T>> for RawNetwork<T> {
    fn from(net: ConductanceNetwork<T>) -> Self {
        RawNetwork {
            n: net.n(),
            weights: net.weights.to_rows(),
        }
    }
}

impl<T: Real> ConductanceNetwork<T> {
    /// Validates symmetry, nonnegativity and connectivity.
    pub fn new(n: usize, weights: &[Vec<T>]) -> Result<Self, NetworkError> {
        if weights.len() != n || weights.iter().any(|r| r.len() != n) {
            return Err(NetworkError::DimensionMismatch { expected: n });
        }
        let m = Matrix::from_rows(weights).map_err(|_| NetworkError::DimensionMismatch { expected: n })?;
        Self::from_matrix(m)
    }

    pub fn from_matrix(weights: Matrix<T>) -> Result<Self, NetworkError> {
        let net = Self::from_matrix_allow_disconnected(weights)?;
        let all: Vec<usize> = (0..net.n()).collect();
        if !net.is_connected_subset(&all) {
            return Err(NetworkError::DisconnectedGraph);
        }
        Ok(net)
    }

    /// Entry validation only; used for derived matrices whose graph may split.
    pub fn from_matrix_allow_disconnected(weights: Matrix<T>) -> Result<Self, NetworkError> {
        let n = weights.rows();
        if n == 0 {
            return Err(NetworkError::Empty);
        }
        if !weights.is_square() {
            return Err(NetworkError::DimensionMismatch { expected: n });
        }
        for i in 0..n {
            for j in 0..n {
                let w = weights[(i, j)];
                if !(w >= T::zero()) || !w.is_finite() {
                    return Err(NetworkError::NegativeWeight { i, j });
                }
            }
        }
        let scale = weights.max_abs().max(T::min_positive_value());
        let tol = T::lit(SYMMETRY_REL_TOL) * scale;
        for i in 0..n {
            for j in (i + 1)..n {
                if (weights[(i, j)] - weights[(j, i)]).abs() > tol {
                    return Err(NetworkError::AsymmetricWeights { i, j });
                }
            }
        }
        Ok(Self { weights })
    }

    /// Complete graph on `n` vertices with a common edge weight.
    pub fn complete(n: usize, w: T) -> Result<Self, NetworkError> {
        Self::from_matrix(Matrix::from_fn(n, n, |i, j| if i == j { T::zero() } else { w }))
    }

    /// Path `0 - 1 - ... - (n-1)` with a common edge weight.
    pub fn path(n: usize, w: T) -> Result<Self, NetworkError> {
        Self::from_matrix(Matrix::from_fn(n, n, |i, j| {
            if i.abs_diff(j) == 1 {
                w
            } else {
                T::zero()
            }
        }))
    }

    pub fn n(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix<T> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> T {
        self.weights[(i, j)]
    }

    pub fn has_zero_diagonal(&self) -> bool {
        (0..self.n()).all(|i| self.weights[(i, i)] == T::zero())
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&j| j != i && self.weights[(i, j)] > T::zero())
    }

    /// Breadth-first search restricted to `subset`.
    pub fn is_connected_subset(&self, subset: &[usize]) -> bool {
        if subset.is_empty() {
            return false;
        }
        let n = self.n();
        let mut member = vec![false; n];
        for &v in subset {
            member[v] = true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([subset[0]]);
        seen[subset[0]] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for u in self.neighbors(v) {
                if member[u] && !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == subset.len()
    }

    /// Graph distance between two vertex sets (number of edges).
    pub fn distance(&self, a: &[usize], b: &[usize]) -> Option<usize> {
        let n = self.n();
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for &v in a {
            dist[v] = 0;
            queue.push_back(v);
        }
        while let Some(v) = queue.pop_front() {
            for u in self.neighbors(v) {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        b.iter().map(|&v| dist[v]).min().filter(|&d| d != usize::MAX)
    }

    /// `H_beta = 2 diag(beta) - W`.
    pub fn h_operator(&self, beta: &PotentialVector<T>) -> Matrix<T> {
        assert_eq!(beta.len(), self.n(), "beta length mismatch");
        let two = T::lit(2.0);
        Matrix::from_fn(self.n(), self.n(), |i, j| {
            let w = self.weights[(i, j)];
            if i == j {
                two * beta.0[i] - w
            } else {
                -w
            }
        })
    }

    /// `K_t = Id - diag(t) W`.
    pub fn k_operator(&self, t: &TimeVector<T>) -> Result<Matrix<T>, NetworkError> {
        self.check_len(t.len())?;
        let t = t.finite_values()?;
        Ok(Matrix::from_fn(self.n(), self.n(), |i, j| {
            let id = if i == j { T::one() } else { T::zero() };
            id - t[i] * self.weights[(i, j)]
        }))
    }

    /// `H^{-1}_{1/(2t)} := K_t^{-1} diag(t)`, well defined when some `t_i = 0`.
    pub fn h_inverse_extended(&self, t: &TimeVector<T>) -> Result<Matrix<T>, NetworkError> {
        let k = self.k_operator(t)?;
        let lu = Lu::new(&k).map_err(|_| NetworkError::SingularK)?;
        let inv = lu.inverse().scale_cols(t.as_slice());
        Ok(inv.symmetrized())
    }

    /// Deformed parameters `W~ = W K_s^{-1}`, `eta~ = eta + W~ (s eta)`.
    pub fn deform_parameters(
        &self,
        eta: &[T],
        s: &TimeVector<T>,
    ) -> Result<DeformedParams<T>, NetworkError> {
        self.check_len(eta.len())?;
        let k = self.k_operator(s)?;
        if !k_is_positive_definite(self, s)? {
            return Err(NetworkError::SingularK);
        }
        let k_inv = Lu::new(&k).map_err(|_| NetworkError::SingularK)?.inverse();
        // W K^{-1} = W + W (K^{-1} s) W is symmetric.
        let w_tilde = self.weights.matmul(&k_inv).symmetrized();
        let s_eta: Vec<T> = s.as_slice().iter().zip(eta).map(|(&a, &b)| a * b).collect();
        let eta_tilde = w_tilde
            .mul_vec(&s_eta)
            .into_iter()
            .zip(eta)
            .map(|(a, &b)| a + b)
            .collect();
        Ok(DeformedParams { w_tilde, eta_tilde })
    }

    /// Residuals of the `K` factorization, determinant ratio and bilinear
    /// identities relating `(t0, t0 + t1)` to the deformed network at `t0`.
    pub fn algebra_residuals(
        &self,
        t0: &TimeVector<T>,
        t1: &TimeVector<T>,
        eta: &[T],
    ) -> Result<AlgebraResiduals<T>, NetworkError> {
        self.check_len(t0.len())?;
        self.check_len(t1.len())?;
        self.check_len(eta.len())?;
        let sum = t0.add(t1)?;
        if !k_is_positive_definite(self, &sum)? {
            return Err(NetworkError::SingularK);
        }
        let k0 = self.k_operator(t0)?;
        let k_sum = self.k_operator(&sum)?;
        let lu0 = Lu::new(&k0).map_err(|_| NetworkError::SingularK)?;
        let w_tilde = self.weights.matmul(&lu0.inverse());
        let k_tilde = Matrix::identity(self.n()).sub(&w_tilde.scale_rows(t1.as_slice()));
        let factorization = k_sum.max_abs_diff(&k_tilde.matmul(&k0)) / k_sum.max_abs().max(T::one());

        let lu_tilde = Lu::new(&k_tilde).map_err(|_| NetworkError::SingularK)?;
        let lu_sum = Lu::new(&k_sum).map_err(|_| NetworkError::SingularK)?;
        let determinant = if t1.as_slice().iter().all(|&x| x > T::zero()) {
            // |H_{1/2(t0+t1)}| / |H~_{1/2t1}| = prod t1/(t0+t1) * |K_{t0}|
            let h_sum = self.h_operator(&sum.half_reciprocal());
            let inv_t1: Vec<T> = t1.as_slice().iter().map(|&x| T::one() / x).collect();
            let h_tilde = Matrix::diagonal(&inv_t1).sub(&w_tilde);
            let lhs = Lu::new(&h_sum).map_err(|_| NetworkError::SingularK)?.det()
                / Lu::new(&h_tilde).map_err(|_| NetworkError::SingularK)?.det();
            let ratio = t1
                .as_slice()
                .iter()
                .zip(sum.as_slice())
                .fold(T::one(), |p, (&a, &b)| p * a / b);
            let rhs = ratio * lu0.det();
            relative_gap(lhs, rhs)
        } else {
            relative_gap(lu_sum.det(), lu_tilde.det() * lu0.det())
        };

        let t0_eta: Vec<T> = t0.as_slice().iter().zip(eta).map(|(&a, &b)| a * b).collect();
        let eta_tilde: Vec<T> = w_tilde
            .mul_vec(&t0_eta)
            .into_iter()
            .zip(eta)
            .map(|(a, &b)| a + b)
            .collect();
        let h_tilde_inv = lu_tilde.inverse().scale_cols(t1.as_slice());
        let lhs = h_tilde_inv.quad_form(&eta_tilde, &eta_tilde);
        let rhs_sum = self.h_inverse_extended(&sum)?.quad_form(eta, eta);
        let rhs_0 = self.h_inverse_extended(t0)?.quad_form(eta, eta);
        let bilinear = (lhs - (rhs_sum - rhs_0)).abs() / rhs_sum.abs().max(lhs.abs()).max(T::one());

        Ok(AlgebraResiduals {
            factorization,
            determinant,
            bilinear,
        })
    }

    /// Sub-network on `subset`, without connectivity validation.
    pub(crate) fn induced_weights(&self, subset: &[usize]) -> Matrix<T> {
        self.weights.select(subset, subset)
    }

    fn check_len(&self, got: usize) -> Result<(), NetworkError> {
        if got == self.n() {
            Ok(())
        } else {
            Err(NetworkError::LengthMismatch {
                expected: self.n(),
                got,
            })
        }
    }
}

fn relative_gap<T: Real>(a: T, b: T) -> T {
    (a - b).abs() / a.abs().max(b.abs()).max(T::min_positive_value())
}

/// `K_t` is positive definite iff `diag(1/t) - W` is, on coordinates with
/// `t_i > 0`; coordinates with `t_i = 0` contribute an identity block.
pub fn k_is_positive_definite<T: Real>(
    net: &ConductanceNetwork<T>,
    t: &TimeVector<T>,
) -> Result<bool, NetworkError> {
    let t = t.finite_values()?;
    let active: Vec<usize> = (0..t.len()).filter(|&i| t[i] > T::zero()).collect();
    if active.is_empty() {
        return Ok(true);
    }
    let m = Matrix::from_fn(active.len(), active.len(), |a, b| {
        let (i, j) = (active[a], active[b]);
        let d = if i == j { T::one() / t[i] } else { T::zero() };
        d - net.weight(i, j)
    });
    Ok(SymmetricFactor::new(&m).is_ok())
}

/// Positive definiteness through the pivoted symmetric factorization.
pub fn is_positive_definite<T: Real>(m: &Matrix<T>) -> Result<bool, NetworkError> {
    Ok(positive_definite_factor(m)?.is_some())
}

/// Like [`is_positive_definite`], returning the factorization on success.
pub fn positive_definite_factor<T: Real>(
    m: &Matrix<T>,
) -> Result<Option<SymmetricFactor<T>>, NetworkError> {
    if !m.is_symmetric(T::lit(SYMMETRY_REL_TOL)) {
        return Err(NetworkError::NotSymmetric);
    }
    match SymmetricFactor::new(m) {
        Ok(f) => Ok(Some(f)),
        Err(LinalgError::NotPositiveDefinite { .. }) => Ok(None),
        Err(_) => Err(NetworkError::NotSymmetric),
    }
}

/// A point `beta`; admissible when `H_beta` is positive definite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PotentialVector<T>(pub Vec<T>);

impl<T: Real> PotentialVector<T> {
    pub fn new(beta: Vec<T>) -> Self {
        Self(beta)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn is_admissible(&self, net: &ConductanceNetwork<T>) -> bool {
        SymmetricFactor::new(&net.h_operator(self)).is_ok()
    }

    /// `T = 1/(2 beta)`, with `1/0 = inf`.
    pub fn to_times(&self) -> TimeVector<T> {
        let two = T::lit(2.0);
        TimeVector(self.0.iter().map(|&b| T::one() / (two * b)).collect())
    }
}

/// Per-vertex times in `[0, inf]`; `inf` means "not hit".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeVector<T>(Vec<T>);

impl<T: Real> TimeVector<T> {
    pub fn new(t: Vec<T>) -> Result<Self, NetworkError> {
        for (i, &x) in t.iter().enumerate() {
            if !(x >= T::zero()) {
                return Err(NetworkError::NegativeTime(i));
            }
        }
        Ok(Self(t))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![T::zero(); n])
    }

    pub fn infinite(n: usize) -> Self {
        Self(vec![T::infinity(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// `t ∧ T` entrywise for a scalar clock `t`.
    pub fn clamp_scalar(&self, t: T) -> Self {
        Self(self.0.iter().map(|&x| x.min(t)).collect())
    }

    /// `s ∧ T` entrywise.
    pub fn min(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| a.min(b)).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self, NetworkError> {
        if self.len() != other.len() {
            return Err(NetworkError::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(Self(self.0.iter().zip(&other.0).map(|(&a, &b)| a + b).collect()))
    }

    /// `beta = 1/(2t)` with `1/inf = 0` and `1/0 = inf`.
    pub fn half_reciprocal(&self) -> PotentialVector<T> {
        let two = T::lit(2.0);
        PotentialVector(self.0.iter().map(|&t| T::one() / (two * t)).collect())
    }

    fn finite_values(&self) -> Result<&[T], NetworkError> {
        match self.0.iter().position(|x| !x.is_finite()) {
            Some(i) => Err(NetworkError::InfiniteTimeEntry(i)),
            None => Ok(&self.0),
        }
    }
}

/// Parameters of the process shifted by per-vertex times.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformedParams<T> {
    pub w_tilde: Matrix<T>,
    pub eta_tilde: Vec<T>,
}

/// Relative residuals of the three deformation identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlgebraResiduals<T> {
    pub factorization: T,
    pub determinant: T,
    pub bilinear: T,
}

impl<T: Real> AlgebraResiduals<T> {
    pub fn max(&self) -> T {
        self.factorization.max(self.determinant).max(self.bilinear)
    }
}

/// `<eta, H^{-1}_{1/(2t)} eta>` computed through the extended inverse.
pub fn extended_quadratic<T: Real>(
    net: &ConductanceNetwork<T>,
    t: &TimeVector<T>,
    eta: &[T],
) -> Result<T, NetworkError> {
    let h_inv = net.h_inverse_extended(t)?;
    Ok(dot(eta, &h_inv.mul_vec(eta)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(rows: &[&[f64]]) -> ConductanceNetwork<f64> {
        let w: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        ConductanceNetwork::new(w.len(), &w).unwrap()
    }

    fn tv(t: &[f64]) -> TimeVector<f64> {
        TimeVector::new(t.to_vec()).unwrap()
    }

    #[test]
    fn build_network_examples() {
        assert!(ConductanceNetwork::new(1, &[vec![0.0]]).is_ok());
        assert!(ConductanceNetwork::new(2, &[vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
        assert_eq!(
            ConductanceNetwork::new(2, &[vec![0.0, 0.0], vec![0.0, 0.0]]),
            Err(NetworkError::DisconnectedGraph)
        );
        assert_eq!(
            ConductanceNetwork::new(2, &[vec![0.0, 1.0], vec![2.0, 0.0]]),
            Err(NetworkError::AsymmetricWeights { i: 0, j: 1 })
        );
        assert_eq!(
            ConductanceNetwork::new(2, &[vec![0.0, -1.0], vec![-1.0, 0.0]]),
            Err(NetworkError::NegativeWeight { i: 0, j: 1 })
        );
        assert!(ConductanceNetwork::new(2, &[vec![0.0, f64::NAN], vec![f64::NAN, 0.0]]).is_err());
        assert!(ConductanceNetwork::<f64>::new(0, &[]).is_err());
    }

    #[test]
    fn json_roundtrip_and_rejection() {
        let n = net(&[&[0.5, 1.0], &[1.0, 0.0]]);
        let s = serde_json::to_string(&n).unwrap();
        assert_eq!(s, r#"{"n":2,"weights":[[0.5,1.0],[1.0,0.0]]}"#);
        let back: ConductanceNetwork<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, n);
        assert!(serde_json::from_str::<ConductanceNetwork<f64>>(r#"{"n":2,"weights":[[0,-1],[-1,0]]}"#).is_err());
        assert!(serde_json::from_str::<ConductanceNetwork<f64>>(r#"{"n":2,"weights":[[0,NaN],[NaN,0]]}"#).is_err());
        assert!(serde_json::from_str::<ConductanceNetwork<f64>>(r#"{"n":3,"weights":[[0,1],[1,0]]}"#).is_err());
    }

    #[test]
    fn h_operator_examples() {
        let one = net(&[&[0.0]]);
        assert_eq!(one.h_operator(&PotentialVector(vec![1.0])).to_rows(), vec![vec![2.0]]);
        let edge = net(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(
            edge.h_operator(&PotentialVector(vec![1.0, 1.0])).to_rows(),
            vec![vec![2.0, -1.0], vec![-1.0, 2.0]]
        );
    }

    #[test]
    fn k_operator_examples() {
        let tri = ConductanceNetwork::complete(3, 0.7).unwrap();
        assert_eq!(tri.k_operator(&TimeVector::zeros(3)).unwrap(), Matrix::identity(3));
        let one = net(&[&[0.3]]);
        assert!((one.k_operator(&tv(&[2.0])).unwrap()[(0, 0)] - (1.0 - 0.6)).abs() < 1e-15);
        assert_eq!(
            tri.k_operator(&TimeVector::new(vec![0.0, f64::INFINITY, 1.0]).unwrap()),
            Err(NetworkError::InfiniteTimeEntry(1))
        );
    }

    #[test]
    fn positive_definiteness_examples() {
        let m = |r: &[&[f64]]| Matrix::from_rows(&r.iter().map(|x| x.to_vec()).collect::<Vec<_>>()).unwrap();
        assert!(is_positive_definite(&Matrix::<f64>::identity(4)).unwrap());
        assert!(is_positive_definite(&m(&[&[2.0, -1.0], &[-1.0, 2.0]])).unwrap());
        assert!(!is_positive_definite(&m(&[&[1.0, -2.0], &[-2.0, 1.0]])).unwrap());
        assert_eq!(
            is_positive_definite(&m(&[&[1.0, 0.5], &[0.4, 1.0]])),
            Err(NetworkError::NotSymmetric)
        );
    }

    #[test]
    fn h_inverse_extended_examples() {
        let tri = ConductanceNetwork::complete(3, 1.0).unwrap();
        assert_eq!(tri.h_inverse_extended(&TimeVector::zeros(3)).unwrap(), Matrix::zeros(3, 3));
        let one = net(&[&[0.0]]);
        assert!((one.h_inverse_extended(&tv(&[0.7])).unwrap()[(0, 0)] - 0.7).abs() < 1e-15);
        // Row and column of a zero time vanish.
        let h = tri.h_inverse_extended(&tv(&[0.2, 0.0, 0.3])).unwrap();
        for k in 0..3 {
            assert_eq!(h[(1, k)], 0.0);
            assert_eq!(h[(k, 1)], 0.0);
        }
        let singular = net(&[&[1.0]]);
        assert_eq!(singular.h_inverse_extended(&tv(&[1.0])), Err(NetworkError::SingularK));
    }

    #[test]
    fn deform_parameters_trivial_cases() {
        let tri = ConductanceNetwork::complete(3, 0.5).unwrap();
        let eta = vec![0.1, 0.2, 0.3];
        let d = tri.deform_parameters(&eta, &TimeVector::zeros(3)).unwrap();
        assert_eq!(d.w_tilde, *tri.weights());
        assert_eq!(d.eta_tilde, eta);
        let one = net(&[&[0.0]]);
        let d = one.deform_parameters(&[0.4], &tv(&[3.0])).unwrap();
        assert_eq!(d.w_tilde[(0, 0)], 0.0);
        assert_eq!(d.eta_tilde, vec![0.4]);
    }

    #[test]
    fn algebra_residuals_trivial_cases() {
        let tri = ConductanceNetwork::complete(3, 0.5).unwrap();
        let eta = [0.3, 0.0, 1.0];
        let t0 = tv(&[0.2, 0.4, 0.1]);
        let r = tri.algebra_residuals(&t0, &TimeVector::zeros(3), &eta).unwrap();
        assert!(r.factorization == 0.0);
        assert!(r.max() < 1e-15);
        let r = tri.algebra_residuals(&TimeVector::zeros(3), &t0, &eta).unwrap();
        assert_eq!(r.factorization, 0.0);
    }

    #[test]
    fn connectivity_and_distance() {
        let p = ConductanceNetwork::path(4, 1.0).unwrap();
        assert!(p.is_connected_subset(&[1, 2]));
        assert!(!p.is_connected_subset(&[0, 2]));
        assert_eq!(p.distance(&[0], &[3]), Some(3));
    }
}
