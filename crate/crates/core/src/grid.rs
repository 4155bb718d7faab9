//! Periodic space-time grid.
//!
//! The spatial domain is the torus `[0, L)^3` sampled with `N` points per
//! axis; time runs over `[0, T]` in `steps` equal steps. Fourier modes use the
//! signed index range `{-N/2, ..., N/2 - 1}` per axis and the wavenumber of
//! mode `k` is `xi_k = k / L`, matching the `exp(-2 pi i xi . x)` transform
//! convention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    side: f64,
    points: usize,
    horizon: f64,
    steps: usize,
}

impl TorusGrid {
    pub fn new(side: f64, points: usize, horizon: f64, steps: usize) -> Result<Self> {
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::config("grid.side", format!("must be positive, got {side}")));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::config("grid.points", format!("must be a power of two >= 4, got {points}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::config("grid.horizon", format!("must be positive, got {horizon}")));
        }
        if steps == 0 || !steps.is_power_of_two() {
            return Err(Error::config(
                "grid.steps",
                format!("must be a power of two so steps align with dyadic cells, got {steps}"),
            ));
        }
        Ok(Self { side, points, horizon, steps })
    }

    /// Side length `L` of the torus.
    pub fn side(&self) -> f64 {
        self.side
    }

    /// Points per axis `N`.
    pub fn points(&self) -> usize {
        self.points
    }

    /// Time horizon `T`.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn dx(&self) -> f64 {
        self.side / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(3)
    }

    /// Dyadic level of a single time step, i.e. `log2(steps)`.
    pub fn step_level(&self) -> u32 {
        self.steps.trailing_zeros()
    }

    /// Total number of grid points `N^3`.
    pub fn len(&self) -> usize {
        self.points * self.points * self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Time of step index `m`.
    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.dt()
    }

    /// Flat index of grid point `(i, j, k)` (row-major, last axis fastest).
    #[inline]
    pub fn flat(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.points + j) * self.points + k
    }

    #[inline]
    pub fn unflat(&self, idx: usize) -> [usize; 3] {
        let n = self.points;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    /// Physical coordinates of a grid point.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unflat(idx);
        let h = self.dx();
        [i as f64 * h, j as f64 * h, k as f64 * h]
    }

    /// Signed mode number of FFT bin `i` along one axis.
    #[inline]
    pub fn signed_mode(&self, i: usize) -> i64 {
        let n = self.points as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Signed mode vector of a flat spectral index.
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let [a, b, c] = self.unflat(idx);
        [self.signed_mode(a), self.signed_mode(b), self.signed_mode(c)]
    }

    /// Flat spectral index of a signed mode, if it lies in the grid's mode range.
    pub fn mode_index(&self, k: [i64; 3]) -> Option<usize> {
        let half = (self.points / 2) as i64;
        let mut out = [0usize; 3];
        for (o, &c) in out.iter_mut().zip(k.iter()) {
            if c < -half || c >= half {
                return None;
            }
            *o = c.rem_euclid(self.points as i64) as usize;
        }
        Some(self.flat(out[0], out[1], out[2]))
    }

    /// Flat index of the conjugate partner `-k (mod N)` of a spectral index.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.points;
        let [a, b, c] = self.unflat(idx);
        self.flat((n - a) % n, (n - b) % n, (n - c) % n)
    }

    /// Wavevector `xi_k = k / L`.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let k = self.mode(idx);
        [k[0] as f64 / self.side, k[1] as f64 / self.side, k[2] as f64 / self.side]
    }

    /// `|xi_k|`.
    pub fn wavenumber(&self, idx: usize) -> f64 {
        let [a, b, c] = self.wavevector(idx);
        (a * a + b * b + c * c).sqrt()
    }

    /// Whether the mode has a component on the Nyquist edge `-N/2`.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let half = -((self.points / 2) as i64);
        self.mode(idx).contains(&half)
    }

    /// Minimum-image displacement between two grid points.
    pub fn min_image(&self, a: usize, b: usize) -> [f64; 3] {
        let pa = self.position(a);
        let pb = self.position(b);
        let mut d = [0.0; 3];
        for i in 0..3 {
            let mut x = pa[i] - pb[i];
            x -= self.side * (x / self.side).round();
            d[i] = x;
        }
        d
    }
}
