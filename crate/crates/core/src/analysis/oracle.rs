//! Oracles computed without the spectral weights: the physical-space Riesz
//! double integral (Ewald split of the periodized kernel) and the linear
//! skeleton driven by a single basis direction.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::{gamma, gamma_ur};

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::green::gauss_legendre;
use crate::noise::{BasisElement, NoiseModel};

/// Discretisation of the Ewald double sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EwaldParams {
    /// Points per axis of the refined evaluation grid.
    pub refine: usize,
    /// Splitting parameter in units of `1/L`.
    pub eta_side: f64,
    /// Real-space images per axis and direction.
    pub images: i64,
    /// Reciprocal modes per axis and direction.
    pub reciprocal: i64,
}

impl Default for EwaldParams {
    fn default() -> Self {
        Self { refine: 16, eta_side: 4.0, images: 2, reciprocal: 8 }
    }
}

fn upper_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(a, x)
    }
}

/// Mean of `|s|^-beta` over the unit cube centred at the origin.
fn cube_average(beta: f64) -> f64 {
    // six pyramids, each a cone over a face at distance 1/2
    let (x, w) = gauss_legendre(32);
    let mut face = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        for (yj, wj) in x.iter().zip(&w) {
            let (u, v) = (0.5 * (xi + 1.0), 0.5 * (yj + 1.0));
            face += 0.25 * wi * wj * (1.0 + u * u + v * v).powf(-beta / 2.0);
        }
    }
    24.0 * 0.5f64.powf(3.0 - beta) / (3.0 - beta) * face
}

/// Periodized Riesz kernel on a refined grid, tabulated once per model by an
/// Ewald split; evaluates `int int phi(x) phi(y) |x - y|^-beta dx dy / c_beta`
/// over one period of zero-mean band-limited fields, which equals
/// `||phi||_H^2` up to discretisation error.
#[derive(Debug, Clone)]
pub struct EwaldOracle {
    model: NoiseModel,
    refined: crate::grid::TorusGrid,
    kernel: Vec<f64>,
}

impl EwaldOracle {
    pub fn new(model: &NoiseModel, params: &EwaldParams) -> Result<Self> {
        let grid = model.grid();
        let beta = model.beta();
        let m = params.refine;
        if m < grid.points() || !m.is_multiple_of(2) {
            return Err(Error::parameter("refine", "must be even and at least the grid size"));
        }
        let side = grid.side();
        let volume = side.powi(3);
        let refined = crate::grid::TorusGrid::new(side, m, grid.horizon(), grid.steps())?;
        let eta = params.eta_side / side;
        let h = side / m as f64;
        let half = beta / 2.0;

        // reciprocal part on the lag table
        let mut recip_modes = Vec::new();
        let r = params.reciprocal;
        for a in -r..=r {
            for b in -r..=r {
                for c in -r..=r {
                    if (a, b, c) == (0, 0, 0) {
                        continue;
                    }
                    let xi = ((a * a + b * b + c * c) as f64).sqrt() / side;
                    let s = (3.0 - beta) / 2.0;
                    let g = PI.powf(1.5)
                        * (PI * xi).powf(beta - 3.0)
                        * gamma(s)
                        * upper_q(s, PI * PI * xi * xi / (eta * eta))
                        / gamma(half);
                    recip_modes.push(([a, b, c], g / volume));
                }
            }
        }
        let images = params.images;
        let mut kernel = vec![0.0; refined.len()];
        for (lag, kv) in kernel.iter_mut().enumerate() {
            let [i, j, k] = refined.unflat(lag);
            let rvec = [i as f64 * h, j as f64 * h, k as f64 * h];
            let mut real = 0.0;
            for a in -images..=images {
                for b in -images..=images {
                    for c in -images..=images {
                        if lag == 0 && (a, b, c) == (0, 0, 0) {
                            continue;
                        }
                        let d = [rvec[0] + a as f64 * side, rvec[1] + b as f64 * side, rvec[2] + c as f64 * side];
                        let dist = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                        real += upper_q(half, eta * eta * dist * dist) * dist.powf(-beta);
                    }
                }
            }
            let mut recip = 0.0;
            for (kk, g) in &recip_modes {
                let phase =
                    2.0 * PI * (kk[0] as f64 * rvec[0] + kk[1] as f64 * rvec[1] + kk[2] as f64 * rvec[2]) / side;
                recip += g * phase.cos();
            }
            *kv = real + recip;
        }
        // cell-averaged singular self term minus the smooth part removed at r = 0
        kernel[0] += cube_average(beta) * h.powf(-beta) - eta.powf(beta) / gamma(half + 1.0);
        Ok(Self { model: model.clone(), refined, kernel })
    }

    /// Double sum for a field given by its transform samples.
    pub fn hnorm_sq(&self, spectral: &[Complex64]) -> Result<f64> {
        let grid = self.model.grid();
        let beta = self.model.beta();
        if spectral.len() != grid.len() {
            return Err(Error::Index { index: spectral.len(), len: grid.len() });
        }
        let refined = &self.refined;
        let m = refined.points();
        let side = grid.side();
        let volume = side.powi(3);

        // series coefficients on the refined grid
        let mut coeffs = vec![Complex64::default(); refined.len()];
        for (idx, &s) in spectral.iter().enumerate() {
            if s == Complex64::default() {
                continue;
            }
            if grid.is_nyquist(idx) {
                return Err(Error::parameter("field", "Nyquist modes are not band-limited"));
            }
            let k = grid.mode(idx);
            if k == [0, 0, 0] {
                continue;
            }
            let j = refined.mode_index(k).expect("refined grid contains the coarse band");
            coeffs[j] = s / volume;
        }
        let phi = Fft3::new(m).inverse_real(&coeffs);

        let mut total = 0.0;
        for (x, &px) in phi.iter().enumerate() {
            let [xa, xb, xc] = refined.unflat(x);
            let mut row = 0.0;
            for (y, &py) in phi.iter().enumerate() {
                let [ya, yb, yc] = refined.unflat(y);
                let lag = refined.flat((ya + m - xa) % m, (yb + m - xb) % m, (yc + m - xc) % m);
                row += py * self.kernel[lag];
            }
            total += px * row;
        }
        let h = side / m as f64;
        let c_beta = PI.powf(beta - 1.5) * gamma((3.0 - beta) / 2.0) / gamma(beta / 2.0);
        Ok(total * h.powi(6) / c_beta)
    }
}

/// One-shot [`EwaldOracle`] evaluation.
pub fn ewald_hnorm_sq(spectral: &[Complex64], model: &NoiseModel, params: &EwaldParams) -> Result<f64> {
    EwaldOracle::new(model, params)?.hnorm_sq(spectral)
}

/// `Phi^h(t, x)` for `h = amplitude e_j` constant in time, unit noise
/// coefficient and no drift, by Gauss–Legendre quadrature of
/// `int_0^t sin(w r)/w dr`.
pub fn skeleton_mode_oracle(element: &BasisElement, model: &NoiseModel, amplitude: f64, t: f64, x: [f64; 3]) -> f64 {
    let grid = model.grid();
    let side = grid.side();
    let k = element.mode;
    let theta = 2.0 * PI * (k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2]) / side;
    let mu = element.weight;
    let spatial = if element.index == element.partner {
        mu.sqrt() * theta.cos()
    } else {
        match element.part {
            crate::noise::Part::Real => (2.0 * mu).sqrt() * theta.cos(),
            crate::noise::Part::Imaginary => (2.0 * mu).sqrt() * theta.sin(),
        }
    };
    let omega = 2.0 * PI * grid.wavenumber(element.index);
    let (nodes, weights) = gauss_legendre(64);
    let integral: f64 = nodes
        .iter()
        .zip(&weights)
        .map(|(z, w)| {
            let r = 0.5 * t * (z + 1.0);
            0.5 * t * w * crate::green::green_fourier(r, omega / (2.0 * PI))
        })
        .sum();
    amplitude * spatial * integral
}
