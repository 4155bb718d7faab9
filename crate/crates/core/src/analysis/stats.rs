//! Moments with jackknife errors, least-squares fits, quantiles and the
//! two-sample Kolmogorov–Smirnov test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_REPLICAS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub p: f64,
    pub descriptor: String,
    pub estimate: f64,
    pub stderr: f64,
    pub replicas: usize,
}

/// Sample mean of `|x|^p` with its jackknife standard error.
pub fn lp_moment(samples: &[f64], p: f64, descriptor: impl Into<String>) -> Result<MomentReport> {
    if samples.len() < MIN_REPLICAS {
        return Err(Error::InsufficientData { needed: MIN_REPLICAS, got: samples.len() });
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::parameter("p", format!("must be positive, got {p}")));
    }
    let powered: Vec<f64> = samples.iter().map(|x| x.abs().powf(p)).collect();
    let (estimate, stderr) = jackknife_mean(&powered);
    if !estimate.is_finite() {
        return Err(Error::Validation("moment estimate is not finite".into()));
    }
    Ok(MomentReport { p, descriptor: descriptor.into(), estimate, stderr, replicas: samples.len() })
}

/// Mean and jackknife standard error from leave-one-out means.
pub fn jackknife_mean(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let total: f64 = xs.iter().sum();
    let mean = total / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let spread: f64 = xs.iter().map(|x| ((total - x) / (n - 1.0) - mean).powi(2)).sum();
    (mean, ((n - 1.0) / n * spread).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::Validation("fit inputs differ in length".into()));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: xs.len() });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Validation("fit inputs must be finite".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Validation("fit abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept: my - slope * mx, r_squared, points: xs.len() })
}

/// Fit of `log y` against `log x` (natural logs); nonpositive values are errors.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::Validation("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Median (mean of the two central order statistics for even counts).
pub fn median(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Ok(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Asymptotic critical value of the two-sample statistic at level 1%.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    // c(alpha) = sqrt(-ln(alpha / 2) / 2)
    let c = (-(0.005f64).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n * m) as f64).sqrt()
}
