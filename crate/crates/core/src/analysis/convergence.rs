//! Coupled distances between approximations and their limit, per-level
//! localized moments and tail probabilities, and the lag discrepancy.

use serde::{Deserialize, Serialize};

use super::holder::{holder_norm, HolderWindow, WindowSamples};
use super::stats::{linear_fit, lp_moment, median};
use crate::error::{Error, Result};

/// `||a - b||_{rho,t0,K}` for samples on the same window.
pub fn window_distance(a: &WindowSamples, b: &WindowSamples, window: &HolderWindow) -> Result<f64> {
    holder_norm(&a.difference(b)?, window)
}

/// [`window_distance`] for two solves that must share one noise realization.
pub fn coupled_distance(a: &WindowSamples, b: &WindowSamples, window: &HolderWindow) -> Result<f64> {
    match (a.realization, b.realization) {
        (Some(x), Some(y)) if x == y => window_distance(a, b, window),
        _ => Err(Error::config("coupling", "inputs were not driven by the same tableau")),
    }
}

/// Per-replica distances and localization indicators, one entry per level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledEnsemble {
    levels: Vec<u32>,
    distances: Vec<Vec<f64>>,
    indicators: Vec<Vec<bool>>,
}

impl CoupledEnsemble {
    pub fn new(levels: Vec<u32>) -> Result<Self> {
        if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("levels", "must be nonempty and strictly increasing"));
        }
        Ok(Self { levels, distances: Vec::new(), indicators: Vec::new() })
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    pub fn push(&mut self, distances: Vec<f64>, indicators: Vec<bool>) -> Result<()> {
        if distances.len() != self.levels.len() || indicators.len() != self.levels.len() {
            return Err(Error::config("levels", "one distance and one indicator per level are required"));
        }
        self.distances.push(distances);
        self.indicators.push(indicators);
        Ok(())
    }

    /// Distances of every replica at level slot `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.distances.iter().map(|d| d[i]).collect()
    }

    pub fn indicator_column(&self, i: usize) -> Vec<bool> {
        self.indicators.iter().map(|d| d[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelEstimate {
    pub level: u32,
    /// `E[d^p 1_{L_n}]`.
    pub localized: f64,
    pub localized_stderr: f64,
    /// `E[d^p]`.
    pub unlocalized: f64,
    pub unlocalized_stderr: f64,
    /// `P(d > lambda)`.
    pub exceedance: f64,
    pub localized_fraction: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub levels: Vec<u32>,
    pub p: f64,
    pub lambda: f64,
    pub replicas: usize,
    pub rows: Vec<LevelEstimate>,
    /// Slope of `log2 E[d^p 1_{L_n}]` against `n`; absent when a moment is zero.
    pub moment_slope: Option<f64>,
    /// Slope of `log2 P(d > lambda)` against `n`; absent when a probability is zero.
    pub exceedance_slope: Option<f64>,
}

impl ConvergenceReport {
    pub fn localized_moments(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.localized).collect()
    }

    pub fn medians(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.median).collect()
    }
}

fn log2_slope(levels: &[u32], values: &[f64]) -> Option<f64> {
    if levels.len() < 2 || values.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = levels.iter().map(|&n| f64::from(n)).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.log2()).collect();
    linear_fit(&xs, &ys).ok().map(|f| f.slope)
}

/// Per-level localized and plain moments of the coupled distances and tail
/// probabilities at `lambda` (default: the median at the coarsest level).
pub fn wz_convergence(ens: &CoupledEnsemble, p: f64, lambda: Option<f64>) -> Result<ConvergenceReport> {
    let lambda = match lambda {
        Some(l) if l.is_finite() && l >= 0.0 => l,
        Some(l) => return Err(Error::config("lambda", format!("must be nonnegative, got {l}"))),
        None => median(&ens.column(0))?,
    };
    let mut rows = Vec::with_capacity(ens.levels.len());
    for (i, &level) in ens.levels.iter().enumerate() {
        let d = ens.column(i);
        let ind = ens.indicator_column(i);
        let masked: Vec<f64> = d.iter().zip(&ind).map(|(&x, &on)| if on { x } else { 0.0 }).collect();
        let loc = lp_moment(&masked, p, format!("localized n={level}"))?;
        let all = lp_moment(&d, p, format!("n={level}"))?;
        let n = d.len() as f64;
        rows.push(LevelEstimate {
            level,
            localized: loc.estimate,
            localized_stderr: loc.stderr,
            unlocalized: all.estimate,
            unlocalized_stderr: all.stderr,
            exceedance: d.iter().filter(|&&x| x > lambda).count() as f64 / n,
            localized_fraction: ind.iter().filter(|&&b| b).count() as f64 / n,
            median: median(&d)?,
        });
    }
    let moments: Vec<f64> = rows.iter().map(|r| r.localized).collect();
    let probs: Vec<f64> = rows.iter().map(|r| r.exceedance).collect();
    Ok(ConvergenceReport {
        levels: ens.levels.clone(),
        p,
        lambda,
        replicas: ens.len(),
        moment_slope: log2_slope(&ens.levels, &moments),
        exceedance_slope: log2_slope(&ens.levels, &probs),
        rows,
    })
}

/// Accumulates `E|X(t,x) - X(t,t_n,x)|^p`, averaged over `x` by stationarity,
/// for each level and lag time.
#[derive(Debug, Clone, PartialEq)]
pub struct LagDiscrepancy {
    levels: Vec<u32>,
    times: Vec<f64>,
    p: f64,
    sums: Vec<Vec<f64>>,
    replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagRow {
    pub level: u32,
    /// `||X(t) - X(t,t_n)||_p` per lag time.
    pub norms: Vec<f64>,
    /// Supremum over the lag times.
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagReport {
    pub p: f64,
    pub times: Vec<f64>,
    pub replicas: usize,
    pub rows: Vec<LagRow>,
    /// Slope of `log2 sup` against `n`; absent when a discrepancy is zero.
    pub slope: Option<f64>,
}

impl LagDiscrepancy {
    pub fn new(levels: Vec<u32>, times: Vec<f64>, p: f64) -> Result<Self> {
        if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("levels", "must be nonempty and strictly increasing"));
        }
        if times.is_empty() {
            return Err(Error::config("lag_times", "must be nonempty"));
        }
        if !(p > 0.0) {
            return Err(Error::config("p", "must be positive"));
        }
        let sums = vec![vec![0.0; times.len()]; levels.len()];
        Ok(Self { levels, times, p, sums, replicas: 0 })
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Adds the field difference of one replica at level slot `level` and
    /// time slot `time`.
    pub fn add(&mut self, level: usize, time: usize, full: &[f64], lagged: &[f64]) {
        let acc: f64 = full.iter().zip(lagged).map(|(a, b)| (a - b).abs().powf(self.p)).sum();
        self.sums[level][time] += acc / full.len() as f64;
    }

    pub fn finish_replica(&mut self) {
        self.replicas += 1;
    }

    pub fn merge(&mut self, other: &LagDiscrepancy) -> Result<()> {
        if self.levels != other.levels || self.times != other.times || self.p != other.p {
            return Err(Error::config("levels", "accumulators differ in layout"));
        }
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.replicas += other.replicas;
        Ok(())
    }

    pub fn report(&self) -> Result<LagReport> {
        if self.replicas == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let r = self.replicas as f64;
        let rows: Vec<LagRow> = self
            .levels
            .iter()
            .zip(&self.sums)
            .map(|(&level, s)| {
                let norms: Vec<f64> = s.iter().map(|v| (v / r).powf(1.0 / self.p)).collect();
                let sup = norms.iter().fold(0.0f64, |m, &v| m.max(v));
                LagRow { level, norms, sup }
            })
            .collect();
        let sups: Vec<f64> = rows.iter().map(|row| row.sup).collect();
        Ok(LagReport {
            p: self.p,
            times: self.times.clone(),
            replicas: self.replicas,
            slope: log2_slope(&self.levels, &sups),
            rows,
        })
    }
}
