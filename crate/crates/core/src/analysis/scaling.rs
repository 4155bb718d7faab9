//! Increment scaling `E|X(t,x) - X(t',x')|^p ~ (|t-t'| + |x-x'|)^{p rho}` and
//! a translation-invariance test of one-point laws.

use serde::{Deserialize, Serialize};

use super::holder::GridBox;
use super::stats::{ks_critical_1pct, ks_statistic, loglog_fit, LinearFit};
use crate::error::{Error, Result};
use crate::grid::TorusGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncrementMode {
    Space,
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub mode: IncrementMode,
    pub p: f64,
    /// Physical separations `|dt|` or `|dx|`.
    pub separations: Vec<f64>,
    pub moments: Vec<f64>,
    pub fit: LinearFit,
    /// `slope / p`.
    pub exponent: f64,
    pub weight: f64,
}

/// Streaming accumulator of weighted increment moments over separations.
#[derive(Debug, Clone)]
pub struct IncrementScaling {
    mode: IncrementMode,
    p: f64,
    separations: Vec<usize>,
    spacing: f64,
    sums: Vec<f64>,
    weight: f64,
}

impl IncrementScaling {
    /// `separations` in grid units (space) or steps (time); `spacing` is `dx`
    /// or `dt`.
    pub fn new(mode: IncrementMode, p: f64, separations: Vec<usize>, spacing: f64) -> Result<Self> {
        if separations.is_empty() || separations.contains(&0) {
            return Err(Error::config("separations", "must be a nonempty list of positive integers"));
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::config("p", format!("must be positive, got {p}")));
        }
        if !(spacing > 0.0) {
            return Err(Error::config("spacing", "must be positive"));
        }
        let len = separations.len();
        Ok(Self { mode, p, separations, spacing, sums: vec![0.0; len], weight: 0.0 })
    }

    pub fn separations(&self) -> &[usize] {
        &self.separations
    }

    /// Adds one realization of a field; pairs run along each axis without
    /// crossing the periodic seam. `weight` is the localization indicator.
    pub fn add_field(&mut self, field: &[f64], grid: &TorusGrid, weight: f64) -> Result<()> {
        if self.mode != IncrementMode::Space {
            return Err(Error::config("mode", "space increments need the space mode"));
        }
        let n = grid.points();
        if field.len() != grid.len() || self.separations.iter().any(|&s| s >= n) {
            return Err(Error::config("separations", "separations must be shorter than the grid"));
        }
        self.weight += weight;
        if weight == 0.0 {
            return Ok(());
        }
        for (slot, &s) in self.separations.iter().enumerate() {
            let mut acc = 0.0;
            let mut count = 0usize;
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let x = field[grid.flat(a, b, c)];
                        if a + s < n {
                            acc += (field[grid.flat(a + s, b, c)] - x).abs().powf(self.p);
                            count += 1;
                        }
                        if b + s < n {
                            acc += (field[grid.flat(a, b + s, c)] - x).abs().powf(self.p);
                            count += 1;
                        }
                        if c + s < n {
                            acc += (field[grid.flat(a, b, c + s)] - x).abs().powf(self.p);
                            count += 1;
                        }
                    }
                }
            }
            self.sums[slot] += weight * acc / count as f64;
        }
        Ok(())
    }

    /// Adds one realization of time increments: `lagged[i]` is the field at
    /// `t - separations[i] dt`, `reference` the field at `t`.
    pub fn add_series(&mut self, reference: &[f64], lagged: &[&[f64]], weight: f64) -> Result<()> {
        if self.mode != IncrementMode::Time {
            return Err(Error::config("mode", "time increments need the time mode"));
        }
        if lagged.len() != self.separations.len() || lagged.iter().any(|l| l.len() != reference.len()) {
            return Err(Error::config("separations", "one lagged field per separation is required"));
        }
        self.weight += weight;
        if weight == 0.0 {
            return Ok(());
        }
        for (slot, l) in lagged.iter().enumerate() {
            let acc: f64 = reference.iter().zip(*l).map(|(a, b)| (a - b).abs().powf(self.p)).sum();
            self.sums[slot] += weight * acc / reference.len() as f64;
        }
        Ok(())
    }

    /// Merges another accumulator with the same layout.
    pub fn merge(&mut self, other: &IncrementScaling) -> Result<()> {
        if self.mode != other.mode || self.separations != other.separations || self.p != other.p {
            return Err(Error::config("separations", "accumulators differ in layout"));
        }
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        self.weight += other.weight;
        Ok(())
    }

    pub fn fit(&self) -> Result<ScalingFit> {
        if self.weight <= 0.0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let separations: Vec<f64> = self.separations.iter().map(|&s| s as f64 * self.spacing).collect();
        let moments: Vec<f64> = self.sums.iter().map(|s| s / self.weight).collect();
        let fit = loglog_fit(&separations, &moments)?;
        Ok(ScalingFit {
            mode: self.mode,
            p: self.p,
            exponent: fit.slope / self.p,
            separations,
            moments,
            fit,
            weight: self.weight,
        })
    }
}

pub const MIN_TRANSLATION_REPLICAS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftRow {
    pub shift: [i64; 3],
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationReport {
    pub point: [usize; 3],
    pub replicas: usize,
    pub rows: Vec<ShiftRow>,
}

/// Collects `X(t, x)` and `X(t, x + z)` over replicas for a set of shifts.
#[derive(Debug, Clone)]
pub struct TranslationSampler {
    point: [usize; 3],
    shifts: Vec<[i64; 3]>,
    indices: Vec<usize>,
    base: Vec<f64>,
    shifted: Vec<Vec<f64>>,
}

impl TranslationSampler {
    /// `point` and every `point + z` must lie in the safe `region`.
    pub fn new(grid: &TorusGrid, region: &GridBox, point: [usize; 3], shifts: Vec<[i64; 3]>) -> Result<Self> {
        if !region.contains_offset(point, [0; 3]) {
            return Err(Error::config("point", "base point lies outside the safe region"));
        }
        let mut indices = vec![grid.flat(point[0], point[1], point[2])];
        for z in &shifts {
            if !region.contains_offset(point, *z) {
                return Err(Error::config("shifts", format!("shift {z:?} leaves the safe region")));
            }
            let n = grid.points() as i64;
            let p: Vec<usize> = (0..3).map(|i| (point[i] as i64 + z[i]).rem_euclid(n) as usize).collect();
            indices.push(grid.flat(p[0], p[1], p[2]));
        }
        let count = shifts.len();
        Ok(Self { point, shifts, indices, base: Vec::new(), shifted: vec![Vec::new(); count] })
    }

    pub fn record(&mut self, field: &[f64]) {
        self.base.push(field[self.indices[0]]);
        for (s, &i) in self.shifted.iter_mut().zip(&self.indices[1..]) {
            s.push(field[i]);
        }
    }

    pub fn replicas(&self) -> usize {
        self.base.len()
    }

    pub fn report(&self) -> Result<TranslationReport> {
        translation_invariance_test(self.point, &self.base, &self.shifts, &self.shifted)
    }
}

/// Per-shift two-sample KS test of `{X(t,x)}` against `{X(t,x+z)}` at 1%.
pub fn translation_invariance_test(
    point: [usize; 3],
    base: &[f64],
    shifts: &[[i64; 3]],
    shifted: &[Vec<f64>],
) -> Result<TranslationReport> {
    if base.len() < MIN_TRANSLATION_REPLICAS {
        return Err(Error::InsufficientData { needed: MIN_TRANSLATION_REPLICAS, got: base.len() });
    }
    if shifts.len() != shifted.len() {
        return Err(Error::config("shifts", "one sample set per shift is required"));
    }
    let rows = shifts
        .iter()
        .zip(shifted)
        .map(|(z, other)| {
            let statistic = ks_statistic(base, other)?;
            let critical = ks_critical_1pct(base.len(), other.len());
            Ok(ShiftRow { shift: *z, statistic, critical, pass: statistic <= critical })
        })
        .collect::<Result<_>>()?;
    Ok(TranslationReport { point, replicas: base.len(), rows })
}
