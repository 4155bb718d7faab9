//! Fundamental solution of the 3D wave equation (unit speed).
//!
//! In physical space `G(t, dx)` is the uniform surface measure on the sphere of
//! radius `t` scaled by `1/(4 pi t)` (total mass `t`); in Fourier space it is
//! the multiplier `sin(2 pi t |xi|) / (2 pi |xi|)`.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::noise::NoiseModel;

/// `F G(t)(xi) = sin(2 pi t |xi|) / (2 pi |xi|)`, with the limit `t` at `xi = 0`.
pub fn green_fourier(t: f64, xi_abs: f64) -> f64 {
    let w = 2.0 * PI * xi_abs;
    if w * t.abs() < 1e-8 {
        // sin(wt)/w = t (1 - (wt)^2/6 + ...)
        t * (1.0 - (w * t) * (w * t) / 6.0)
    } else {
        (w * t).sin() / w
    }
}

/// Multiplier values on every grid mode at a fixed time.
#[derive(Debug, Clone)]
pub struct GreenSpectral {
    pub t: f64,
    pub values: Vec<f64>,
}

impl GreenSpectral {
    pub fn new(t: f64, model: &NoiseModel) -> Self {
        let grid = model.grid();
        let values = (0..grid.len()).map(|idx| green_fourier(t, grid.wavenumber(idx))).collect();
        Self { t, values }
    }
}

/// `||G(t)||_H^2 = sum_k mu_k (F G(t)(xi_k))^2`.
pub fn green_hnorm_sq(t: f64, model: &NoiseModel) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::parameter("t", format!("must be nonnegative, got {t}")));
    }
    let grid = model.grid();
    Ok(model
        .weights()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(idx, &w)| {
            let g = green_fourier(t, grid.wavenumber(idx));
            w * g * g
        })
        .sum())
}

/// Radii `(xi_lo, xi_hi)` of the spectral band a grid resolves: the spheres
/// with the volumes of the excluded zero cell and of the full mode cube.
pub fn resolved_band(grid: &TorusGrid) -> (f64, f64) {
    let cell = 1.0 / grid.side();
    let lo = (3.0 / (4.0 * PI)).cbrt() * cell;
    let hi = (6.0 / PI).cbrt() * 0.5 * grid.points() as f64 * cell;
    (lo, hi)
}

/// Whole-space constant `C` in `int mu(dxi) |F G(t)(xi)|^2 = C t^{2-beta}`.
pub fn whole_space_constant(beta: f64) -> f64 {
    // (1/pi) int_0^inf x^{m-1} sin^2(a x) dx with m = beta - 2, a = 2 pi
    let m = beta - 2.0;
    let a = 2.0 * PI;
    -1.0 / (2f64.powf(m + 2.0) * a.powf(m) * gamma(1.0 - m) * (PI * m / 2.0).sin())
}

/// Relative truncation error of `green_hnorm_sq` against `C t^{2-beta}`:
/// the mass below `xi_lo` plus the oscillation-averaged tail above `xi_hi`.
pub fn truncation_error(t: f64, beta: f64, grid: &TorusGrid) -> f64 {
    let (lo, hi) = resolved_band(grid);
    let infrared = 4.0 * PI * t * t * lo.powf(beta) / beta;
    let ultraviolet = hi.powf(beta - 2.0) / (2.0 * PI * (2.0 - beta));
    (infrared + ultraviolet) / (whole_space_constant(beta) * t.powf(2.0 - beta))
}

/// The decade `[t0, 10 t0]` whose worst-case [`truncation_error`] is
/// smallest, i.e. where the grid sum best follows the power law.
pub fn power_law_window(grid: &TorusGrid, beta: f64) -> Result<(f64, f64)> {
    crate::noise::check_beta(beta)?;
    let worst = |t0: f64| truncation_error(t0, beta, grid).max(truncation_error(10.0 * t0, beta, grid));
    let side = grid.side();
    let t0 = (0..=800)
        .map(|i| side * 10f64.powf(-4.0 + 4.0 * f64::from(i) / 800.0))
        .min_by(|a, b| worst(*a).total_cmp(&worst(*b)))
        .expect("nonempty scan");
    Ok((t0, 10.0 * t0))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Product rule on the unit sphere: Gauss–Legendre in `cos(theta)` times a
/// uniform azimuthal grid.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    directions: Vec<[f64; 3]>,
    weights: Vec<f64>,
    degree: usize,
}

impl SphereQuadrature {
    pub fn product(polar: usize, azimuth: usize) -> Result<Self> {
        if polar == 0 || azimuth == 0 {
            return Err(Error::parameter("quadrature", "node counts must be positive"));
        }
        let (z, wz) = gauss_legendre(polar);
        let dphi = 2.0 * PI / azimuth as f64;
        let mut directions = Vec::with_capacity(polar * azimuth);
        let mut weights = Vec::with_capacity(polar * azimuth);
        for (&c, &w) in z.iter().zip(&wz) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..azimuth {
                let phi = (j as f64 + 0.5) * dphi;
                directions.push([s * phi.cos(), s * phi.sin(), c]);
                weights.push(w * dphi);
            }
        }
        let degree = (2 * polar - 1).min(azimuth - 1);
        Ok(Self { directions, weights, degree })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Highest total polynomial degree integrated exactly.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn directions(&self) -> &[[f64; 3]] {
        &self.directions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `sum_q w_q f(dir_q)`, approximating the surface integral over `S^2`.
    pub fn integrate<F: Fn([f64; 3]) -> f64>(&self, f: F) -> f64 {
        self.directions.iter().zip(&self.weights).map(|(d, w)| w * f(*d)).sum()
    }
}

impl Default for SphereQuadrature {
    fn default() -> Self {
        Self::product(16, 32).expect("default rule")
    }
}

/// `[G(t) * psi](x) = (1/(4 pi t)) int_{|y|=t} psi(x + y) sigma_t(dy)`.
pub fn sphere_convolve<F: Fn([f64; 3]) -> f64>(t: f64, x: [f64; 3], psi: F, quad: &SphereQuadrature) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::parameter("t", format!("must be positive, got {t}")));
    }
    let s = quad.integrate(|d| psi([x[0] + t * d[0], x[1] + t * d[1], x[2] + t * d[2]]));
    Ok(s * t * t / (4.0 * PI * t))
}
