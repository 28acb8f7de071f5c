//! One-sample two-tailed Student's t-test.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("t-test needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("degrees of freedom must be positive")]
    InvalidDegreesOfFreedom,
    #[error("probability {0} outside (0, 1)")]
    InvalidProbability(f64),
}

/// Two-tailed significance level matching 99% confidence.
pub const ALPHA_99: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_stat: f64,
    pub df: usize,
    pub p_value: f64,
    pub significant_at_99: bool,
    pub sample_mean: f64,
    pub sample_sd: f64,
}

/// CDF of Student's t with `df` degrees of freedom, via the regularised
/// incomplete beta function.
pub fn student_t_cdf(t: f64, df: usize) -> Result<f64, StatsError> {
    if df == 0 {
        return Err(StatsError::InvalidDegreesOfFreedom);
    }
    if t.is_nan() {
        return Ok(f64::NAN);
    }
    if t.is_infinite() {
        return Ok(if t > 0.0 { 1.0 } else { 0.0 });
    }
    let nu = df as f64;
    let tail = 0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + t * t));
    Ok(if t >= 0.0 { 1.0 - tail } else { tail })
}

/// Two-tailed p-value `P(|T| >= |t|)`.
pub fn two_tailed_p(t: f64, df: usize) -> Result<f64, StatsError> {
    if df == 0 {
        return Err(StatsError::InvalidDegreesOfFreedom);
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let nu = df as f64;
    Ok(beta_reg(0.5 * nu, 0.5, nu / (nu + t * t)).clamp(0.0, 1.0))
}

/// Positive `t` with `P(|T| >= t) = alpha`, found by bisection on the CDF.
pub fn critical_value(alpha: f64, df: usize) -> Result<f64, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidProbability(alpha));
    }
    let target = 1.0 - 0.5 * alpha;
    let mut hi = 1.0;
    while student_t_cdf(hi, df)? < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_cdf(mid, df)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Tests whether the sample mean differs from `hypothesized_mean`.
///
/// Zero-variance samples are decided directly: equal means give `t = 0,
/// p = 1`; different means give an infinite statistic and `p = 0`.
pub fn one_sample_t_test(samples: &[f64], hypothesized_mean: f64) -> Result<TTestResult, StatsError> {
    let n = samples.len();
    if n < 2 {
        return Err(StatsError::TooFewSamples(n));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let df = n - 1;
    let diff = mean - hypothesized_mean;
    let (t_stat, p_value) = if sd == 0.0 {
        if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(diff), 0.0)
        }
    } else {
        let t = diff / (sd / (n as f64).sqrt());
        (t, two_tailed_p(t, df)?)
    };
    Ok(TTestResult {
        t_stat,
        df,
        p_value,
        significant_at_99: p_value < ALPHA_99,
        sample_mean: mean,
        sample_sd: sd,
    })
}
