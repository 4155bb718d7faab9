//! The norm `||g||_{rho,t0,K} = sup |g| + sup |g(t,x) - g(s,y)| / (|t-s| + |x-y|)^rho`
//! over `[t0, T] x K`, evaluated on grid samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::solver::{FieldState, SaveGrid, Trajectory};

/// Axis-aligned box of grid points; indices wrap modulo `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridBox {
    pub origin: [usize; 3],
    pub shape: [usize; 3],
}

impl GridBox {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat grid indices, row-major over the box.
    pub fn points(&self, grid: &TorusGrid) -> Vec<usize> {
        let n = grid.points();
        let mut out = Vec::with_capacity(self.len());
        for a in 0..self.shape[0] {
            for b in 0..self.shape[1] {
                for c in 0..self.shape[2] {
                    out.push(grid.flat((self.origin[0] + a) % n, (self.origin[1] + b) % n, (self.origin[2] + c) % n));
                }
            }
        }
        out
    }

    /// Physical diameter of the box.
    pub fn diameter(&self, grid: &TorusGrid) -> f64 {
        let h = grid.dx();
        self.shape.iter().map(|&s| ((s.max(1) - 1) as f64 * h).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains_offset(&self, base: [usize; 3], offset: [i64; 3]) -> bool {
        (0..3).all(|i| {
            let rel = base[i] as i64 - self.origin[i] as i64 + offset[i];
            rel >= 0 && rel < self.shape[i] as i64
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairPolicy {
    /// Offsets in `{0, +-1, +-2, +-4, ...}` per axis and in time, at most
    /// `max_pairs` pairs kept by uniform striding.
    Dyadic { max_pairs: usize },
    /// Every unordered pair.
    Exhaustive,
}

impl Default for PairPolicy {
    fn default() -> Self {
        PairPolicy::Dyadic { max_pairs: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderWindow {
    pub rho: f64,
    pub t0: f64,
    pub region: GridBox,
    #[serde(default)]
    pub policy: PairPolicy,
    /// Sample every `time_stride`-th step from `t0` on.
    #[serde(default = "one")]
    pub time_stride: usize,
}

fn one() -> usize {
    1
}

impl HolderWindow {
    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::config("window.rho", format!("must lie in (0, 1), got {}", self.rho)));
        }
        if !(self.t0 > 0.0 && self.t0 < grid.horizon()) {
            return Err(Error::config("window.t0", format!("must lie in (0, T), got {}", self.t0)));
        }
        if self.region.is_empty() || self.region.shape.iter().any(|&s| s > grid.points()) {
            return Err(Error::config("window.region", "box must be nonempty and fit in the grid"));
        }
        let margin = 2.0 * (grid.horizon() - self.t0);
        for (axis, &s) in self.region.shape.iter().enumerate() {
            let extent = (s - 1) as f64 * grid.dx();
            if extent + margin > grid.side() + 1e-12 {
                return Err(Error::config(
                    "window.region",
                    format!(
                        "axis {axis}: box extent {extent} plus light-cone margin {margin} exceeds the torus side {}",
                        grid.side()
                    ),
                ));
            }
        }
        if self.time_stride == 0 {
            return Err(Error::config("window.time_stride", "must be at least 1"));
        }
        Ok(())
    }

    /// First step index at or after `t0`.
    pub fn first_step(&self, grid: &TorusGrid) -> usize {
        (self.t0 / grid.dt() - 1e-9).ceil() as usize
    }

    /// Steps the window samples.
    pub fn save_grid(&self, grid: &TorusGrid) -> Result<SaveGrid> {
        SaveGrid::from_steps(grid, (self.first_step(grid)..=grid.steps()).step_by(self.time_stride))
    }

    pub fn samples_step(&self, grid: &TorusGrid, step: usize) -> bool {
        let first = self.first_step(grid);
        step >= first && (step - first).is_multiple_of(self.time_stride)
    }
}

/// Field values on `[t0, T] x K`: time-major, then the box in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSamples {
    pub times: Vec<f64>,
    pub shape: [usize; 3],
    pub dx: f64,
    pub values: Vec<f64>,
    /// Identifier of the noise realization (tableau seed), if any.
    pub realization: Option<u64>,
}

impl WindowSamples {
    pub fn points_per_time(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn difference(&self, other: &WindowSamples) -> Result<WindowSamples> {
        if self.times != other.times || self.shape != other.shape || self.dx != other.dx {
            return Err(Error::config("window", "samples come from different windows"));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(WindowSamples { values, realization: self.realization, ..self.clone() })
    }

    pub fn from_trajectory(traj: &Trajectory, window: &HolderWindow) -> Result<Self> {
        let mut s = WindowSampler::new(&traj.grid, window, traj.drive.tableau_seed)?;
        for st in traj.states() {
            s.record(st);
        }
        s.finish()
    }
}

/// Collects window samples from a stream of states.
#[derive(Debug, Clone)]
pub struct WindowSampler {
    grid: TorusGrid,
    window: HolderWindow,
    points: Vec<usize>,
    samples: WindowSamples,
}

impl WindowSampler {
    pub fn new(grid: &TorusGrid, window: &HolderWindow, realization: Option<u64>) -> Result<Self> {
        window.validate(grid)?;
        Ok(Self {
            grid: *grid,
            window: *window,
            points: window.region.points(grid),
            samples: WindowSamples {
                times: Vec::new(),
                shape: window.region.shape,
                dx: grid.dx(),
                values: Vec::new(),
                realization,
            },
        })
    }

    pub fn record(&mut self, state: &FieldState) {
        let step = (state.time / self.grid.dt()).round() as usize;
        if self.window.samples_step(&self.grid, step) {
            self.samples.times.push(state.time);
            self.samples.values.extend(self.points.iter().map(|&i| state.u[i]));
        }
    }

    pub fn finish(self) -> Result<WindowSamples> {
        if self.samples.times.is_empty() {
            return Err(Error::config("window", "no saved state falls in [t0, T]"));
        }
        Ok(self.samples)
    }
}

fn axis_offsets(len: usize, policy: &PairPolicy) -> Vec<i64> {
    let n = len as i64;
    match policy {
        PairPolicy::Exhaustive => (-(n - 1)..n).collect(),
        PairPolicy::Dyadic { .. } => {
            let mut v = vec![0];
            let mut s = 1;
            while s < n {
                v.push(s);
                v.push(-s);
                s *= 2;
            }
            v.sort_unstable();
            v
        }
    }
}

/// `||g||_{rho,t0,K}` of the samples under the window's pair policy.
pub fn holder_norm(samples: &WindowSamples, window: &HolderWindow) -> Result<f64> {
    let nt = samples.times.len();
    let [nx, ny, nz] = samples.shape;
    let per_time = nx * ny * nz;
    if samples.values.len() != nt * per_time || nt == 0 {
        return Err(Error::Validation("window samples are inconsistent".into()));
    }
    let sup = samples.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let dims = [nt, nx, ny, nz];
    let lists: Vec<Vec<i64>> = dims.iter().map(|&d| axis_offsets(d, &window.policy)).collect();
    let mut offsets = Vec::new();
    for &a in &lists[0] {
        for &b in &lists[1] {
            for &c in &lists[2] {
                for &d in &lists[3] {
                    let o = [a, b, c, d];
                    // lexicographically positive: each unordered pair once
                    if o.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0) {
                        offsets.push(o);
                    }
                }
            }
        }
    }
    let count =
        |o: &[i64; 4]| -> usize { (0..4).map(|i| dims[i].saturating_sub(o[i].unsigned_abs() as usize)).product() };
    let total: usize = offsets.iter().map(count).sum();
    if total == 0 {
        return Err(Error::config("window", "the pair set is empty"));
    }
    let stride = match window.policy {
        PairPolicy::Dyadic { max_pairs } => total.div_ceil(max_pairs.max(1)),
        PairPolicy::Exhaustive => 1,
    };

    let idx = |t: usize, i: usize, j: usize, k: usize| ((t * nx + i) * ny + j) * nz + k;
    let range = |off: i64, len: usize| -> std::ops::Range<usize> {
        if off >= 0 {
            0..len.saturating_sub(off as usize)
        } else {
            (-off) as usize..len
        }
    };
    let mut counter = 0usize;
    let mut best: f64 = 0.0;
    for o in &offsets {
        let dx = samples.dx * ((o[1] * o[1] + o[2] * o[2] + o[3] * o[3]) as f64).sqrt();
        for t in range(o[0], nt) {
            let t2 = (t as i64 + o[0]) as usize;
            let dist = ((samples.times[t2] - samples.times[t]).abs() + dx).powf(window.rho);
            for i in range(o[1], nx) {
                let i2 = (i as i64 + o[1]) as usize;
                for j in range(o[2], ny) {
                    let j2 = (j as i64 + o[2]) as usize;
                    for k in range(o[3], nz) {
                        counter += 1;
                        if stride > 1 && !(counter - 1).is_multiple_of(stride) {
                            continue;
                        }
                        let k2 = (k as i64 + o[3]) as usize;
                        let d = (samples.values[idx(t2, i2, j2, k2)] - samples.values[idx(t, i, j, k)]).abs();
                        best = best.max(d / dist);
                    }
                }
            }
        }
    }
    Ok(sup + best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(rho: f64, policy: PairPolicy) -> HolderWindow {
        HolderWindow { rho, t0: 1.0, region: GridBox { origin: [0; 3], shape: [2, 2, 2] }, policy, time_stride: 1 }
    }

    fn samples(times: Vec<f64>, shape: [usize; 3], f: impl Fn(f64, [usize; 3]) -> f64) -> WindowSamples {
        let mut values = Vec::new();
        for &t in &times {
            for a in 0..shape[0] {
                for b in 0..shape[1] {
                    for c in 0..shape[2] {
                        values.push(f(t, [a, b, c]));
                    }
                }
            }
        }
        WindowSamples { times, shape, dx: 0.1, values, realization: None }
    }

    #[test]
    fn constant_field_norm_is_its_modulus() {
        let s = samples(vec![1.0, 1.5, 2.0], [2, 2, 2], |_, _| -2.5);
        for p in [PairPolicy::default(), PairPolicy::Exhaustive] {
            assert_eq!(holder_norm(&s, &window(0.4, p)).unwrap(), 2.5);
        }
    }

    #[test]
    fn time_ramp_closed_form() {
        let times: Vec<f64> = (0..=4).map(|i| 1.0 + 0.25 * f64::from(i)).collect();
        let s = samples(times, [2, 2, 2], |t, _| t);
        for p in [PairPolicy::default(), PairPolicy::Exhaustive] {
            assert!((holder_norm(&s, &window(0.5, p)).unwrap() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_point_has_no_pairs() {
        let s = samples(vec![1.0], [1, 1, 1], |_, _| 1.0);
        assert!(matches!(holder_norm(&s, &window(0.5, PairPolicy::Exhaustive)), Err(Error::Config { .. })));
    }

    #[test]
    fn cap_limits_work() {
        let times: Vec<f64> = (0..8).map(|i| 1.0 + 0.1 * f64::from(i)).collect();
        let s = samples(times, [4, 4, 4], |t, x| (t * 7.0 + x[0] as f64 * 1.3 - x[2] as f64).sin());
        let full = holder_norm(&s, &window(0.5, PairPolicy::Dyadic { max_pairs: usize::MAX })).unwrap();
        let capped = holder_norm(&s, &window(0.5, PairPolicy::Dyadic { max_pairs: 500 })).unwrap();
        let all = holder_norm(&s, &window(0.5, PairPolicy::Exhaustive)).unwrap();
        assert!(capped <= full && full <= all);
    }

    #[test]
    fn window_validation() {
        let grid = TorusGrid::new(2.56, 16, 1.0, 128).unwrap();
        let ok = HolderWindow {
            rho: 0.4,
            t0: 0.5,
            region: GridBox { origin: [6; 3], shape: [3; 3] },
            policy: PairPolicy::default(),
            time_stride: 4,
        };
        ok.validate(&grid).unwrap();
        assert!(HolderWindow { rho: 1.0, ..ok }.validate(&grid).is_err());
        assert!(HolderWindow { t0: 1.0, ..ok }.validate(&grid).is_err());
        assert!(HolderWindow { t0: 0.05, region: GridBox { origin: [0; 3], shape: [8, 3, 3] }, ..ok }
            .validate(&grid)
            .is_err());
        assert_eq!(ok.first_step(&grid), 64);
        assert!(ok.samples_step(&grid, 68) && !ok.samples_step(&grid, 66));
    }
}
