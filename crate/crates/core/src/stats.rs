//! Reference laws and the tests that turn Monte Carlo output into verdicts.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_lr;
use thiserror::Error;

/// Default test size.
pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("argument outside the domain: {0}")]
    DomainViolation(&'static str),
    #[error("sample contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// Outcome of one statistical or deterministic check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    /// `None` for standard-error band and residual checks.
    pub p_value: Option<f64>,
    pub n: usize,
    pub verdict: Verdict,
    pub tolerance: String,
}

impl TestReport {
    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// `|estimate - target| <= k * se`.
    pub fn se_band(name: impl Into<String>, estimate: f64, target: f64, se: f64, k: f64, n: usize) -> Self {
        let gap = (estimate - target).abs();
        Self {
            name: name.into(),
            statistic: if se > 0.0 { gap / se } else if gap == 0.0 { 0.0 } else { f64::INFINITY },
            p_value: None,
            n,
            verdict: Verdict::from_bool(gap <= k * se),
            tolerance: format!("|estimate - target| <= {k} s.e. (estimate {estimate:.6e}, target {target:.6e}, s.e. {se:.3e})"),
        }
    }

    /// `residual < tol`.
    pub fn residual(name: impl Into<String>, residual: f64, tol: f64, n: usize) -> Self {
        Self {
            name: name.into(),
            statistic: residual,
            p_value: None,
            n,
            verdict: Verdict::from_bool(residual < tol),
            tolerance: format!("residual < {tol:e}"),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Bonferroni-corrected per-test size.
pub fn bonferroni(alpha: f64, tests: usize) -> f64 {
    alpha / tests.max(1) as f64
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> Result<(f64, f64), StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() == 1 {
        return Ok((mean, 0.0));
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Summation in a fixed pairwise order, independent of thread scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean and standard error of `exp(-<lambda, beta>)` over the samples.
pub fn empirical_laplace(samples: &[Vec<f64>], lambda: &[f64]) -> Result<(f64, f64), StatsError> {
    let values: Vec<f64> = samples
        .iter()
        .map(|b| (-b.iter().zip(lambda).map(|(x, l)| x * l).sum::<f64>()).exp())
        .collect();
    mean_se(&values)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// `ln P(N(0,1) > z)`, accurate far into the upper tail.
pub fn log_normal_sf(z: f64) -> f64 {
    if z < 30.0 {
        (0.5 * erfc(z / SQRT_2)).ln()
    } else {
        let z2 = z * z;
        // Mills ratio asymptotic series.
        let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
        -0.5 * z2 - z.ln() - 0.5 * (2.0 * PI).ln() + series.ln()
    }
}

/// Inverse Gaussian CDF with mean `mu` and shape `shape`.
pub fn ig_cdf(mu: f64, shape: f64, x: f64) -> Result<f64, StatsError> {
    if !(mu > 0.0) || !(shape > 0.0) {
        return Err(StatsError::DomainViolation("inverse Gaussian parameters must be positive"));
    }
    if !(x > 0.0) {
        return Err(StatsError::DomainViolation("inverse Gaussian CDF needs x > 0"));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let r = (shape / x).sqrt();
    let first = normal_cdf(r * (x / mu - 1.0));
    let second = (2.0 * shape / mu + log_normal_sf(r * (x / mu + 1.0))).exp();
    Ok((first + second).clamp(0.0, 1.0))
}

/// Gamma CDF (shape, rate): the regularized lower incomplete gamma function.
pub fn gamma_cdf(shape: f64, rate: f64, x: f64) -> Result<f64, StatsError> {
    if !(shape > 0.0) || !(rate > 0.0) {
        return Err(StatsError::DomainViolation("gamma parameters must be positive"));
    }
    if !(x > 0.0) {
        return Err(StatsError::DomainViolation("gamma CDF needs x > 0"));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(gamma_lr(shape, rate * x).clamp(0.0, 1.0))
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let c = -PI * PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=8)
            .map(|k| {
                let m = (2 * k - 1) as f64;
                (c * m * m).exp()
            })
            .sum();
        (1.0 - (2.0 * PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let kf = k as f64;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * kf * kf * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let root = n_eff.sqrt();
    kolmogorov_sf((root + 0.12 + 0.11 / root) * d)
}

fn sorted_finite(xs: &[f64]) -> Result<Vec<f64>, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if xs.iter().any(|x| x.is_nan()) {
        return Err(StatsError::NonFinite);
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample(
    name: impl Into<String>,
    samples: &[f64],
    cdf: impl Fn(f64) -> f64,
    alpha: f64,
) -> Result<TestReport, StatsError> {
    let xs = sorted_finite(samples)?;
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let p = ks_p_value(d, n);
    Ok(TestReport {
        name: name.into(),
        statistic: d,
        p_value: Some(p),
        n: xs.len(),
        verdict: Verdict::from_bool(p > alpha),
        tolerance: format!("KS p-value > {alpha:.3e}"),
    })
}

/// Two-sample Kolmogorov–Smirnov statistic; ties are handled exactly.
pub fn ks_two_sample_statistic(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    let a = sorted_finite(a)?;
    let b = sorted_finite(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(name: impl Into<String>, a: &[f64], b: &[f64], alpha: f64) -> Result<TestReport, StatsError> {
    let d = ks_two_sample_statistic(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let p = ks_p_value(d, na * nb / (na + nb));
    Ok(TestReport {
        name: name.into(),
        statistic: d,
        p_value: Some(p),
        n: a.len() + b.len(),
        verdict: Verdict::from_bool(p > alpha),
        tolerance: format!("two-sample KS p-value > {alpha:.3e}"),
    })
}

/// Compares `E[e^{-l1 x - l2 y}]` with `E[e^{-l1 x}] E[e^{-l2 y}]`; passes
/// when the gap is within 3 delta-method standard errors.
pub fn independence_check(
    name: impl Into<String>,
    pairs: &[(f64, f64)],
    lambda1: f64,
    lambda2: f64,
) -> Result<TestReport, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let n = pairs.len() as f64;
    let joint: Vec<f64> = pairs.iter().map(|(x, y)| (-lambda1 * x - lambda2 * y).exp()).collect();
    let left: Vec<f64> = pairs.iter().map(|(x, _)| (-lambda1 * x).exp()).collect();
    let right: Vec<f64> = pairs.iter().map(|(_, y)| (-lambda2 * y).exp()).collect();
    let (ma, mb, mc) = (pairwise_sum(&joint) / n, pairwise_sum(&left) / n, pairwise_sum(&right) / n);
    let gap = ma - mb * mc;
    // gradient of a - b c at the means is (1, -c, -b)
    let lin: Vec<f64> = (0..pairs.len())
        .map(|k| (joint[k] - ma) - mc * (left[k] - mb) - mb * (right[k] - mc))
        .collect();
    let var = if pairs.len() > 1 {
        pairwise_sum(&lin.iter().map(|v| v * v).collect::<Vec<_>>()) / (n - 1.0)
    } else {
        0.0
    };
    let se = (var / n).sqrt();
    Ok(TestReport::se_band(name, gap, 0.0, se, 3.0, pairs.len()))
}
