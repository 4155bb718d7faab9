//! Riesz covariance, its spectral weights and the discrete `H` norm.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::grid::TorusGrid;

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 && beta < 2.0 {
        Ok(())
    } else {
        Err(Error::parameter("beta", format!("must lie in (0, 2), got {beta}")))
    }
}

/// Spatial covariance density `|x|^{-beta}`.
pub fn riesz_covariance(x: [f64; 3], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if r == 0.0 {
        return Err(Error::SingularKernel);
    }
    Ok(r.powf(-beta))
}

/// Per-mode spectral mass `mu_k = |xi_k|^{-(3-beta)} L^{-3}`, with `mu_0 = 0`.
pub fn spectral_weight(k: [i64; 3], grid: &TorusGrid, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let idx = grid
        .mode_index(k)
        .ok_or_else(|| Error::parameter("k", format!("mode {k:?} outside grid range for N = {}", grid.points())))?;
    Ok(weight_at(grid, idx, beta))
}

fn weight_at(grid: &TorusGrid, idx: usize, beta: f64) -> f64 {
    let xi = grid.wavenumber(idx);
    if xi == 0.0 {
        0.0
    } else {
        xi.powf(-(3.0 - beta)) / grid.side().powi(3)
    }
}

/// Discretised spectral measure of the Riesz noise on a torus grid.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    grid: TorusGrid,
    beta: f64,
    weights: Vec<f64>,
}

impl NoiseModel {
    pub fn new(grid: TorusGrid, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let weights = (0..grid.len()).map(|idx| weight_at(&grid, idx, beta)).collect();
        Ok(Self { grid, beta, weights })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Mode weights indexed like the FFT output.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn zero_mode_weight(&self) -> f64 {
        self.weights[0]
    }

    /// `sum_k mu_k exp(2 pi i xi_k . r)`: the kernel the synthesised noise
    /// actually carries, evaluated at a grid lag.
    pub fn discrete_kernel(&self, lag: [i64; 3]) -> f64 {
        let l = self.grid.side();
        let h = self.grid.dx();
        let r = [lag[0] as f64 * h, lag[1] as f64 * h, lag[2] as f64 * h];
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(idx, &w)| {
                let k = self.grid.mode(idx);
                let phase =
                    2.0 * std::f64::consts::PI * (k[0] as f64 * r[0] + k[1] as f64 * r[1] + k[2] as f64 * r[2]) / l;
                w * phase.cos()
            })
            .sum()
    }

    /// `L^3 c_k`: samples of the continuous Fourier transform of a grid field.
    pub fn transform_samples(&self, fft: &Fft3, field: &[f64]) -> Vec<Complex64> {
        let vol = self.grid.side().powi(3);
        let mut c = fft.forward_real(field);
        c.iter_mut().for_each(|z| *z *= vol);
        c
    }
}

/// `sum_k mu_k |phi_hat_k|^2` for transform samples `phi_hat_k = F phi(xi_k)`.
///
/// The input must be Hermitian (`phi_hat_{-k} = conj(phi_hat_k)`), i.e. come
/// from a real field.
pub fn hnorm_sq(spectral: &[Complex64], model: &NoiseModel) -> Result<f64> {
    let grid = model.grid();
    if spectral.len() != grid.len() {
        return Err(Error::Validation(format!("expected {} coefficients, got {}", grid.len(), spectral.len())));
    }
    let scale = spectral.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    let tol = 1e-9 * scale.max(f64::MIN_POSITIVE);
    for (idx, z) in spectral.iter().enumerate() {
        let partner = spectral[grid.conjugate_index(idx)];
        if (*z - partner.conj()).norm() > tol {
            return Err(Error::Validation(format!("coefficients are not Hermitian at mode {:?}", grid.mode(idx))));
        }
    }
    Ok(spectral.iter().zip(model.weights()).map(|(z, &w)| w * z.norm_sqr()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn riesz_examples() {
        assert_eq!(riesz_covariance([1.0, 0.0, 0.0], 1.0).unwrap(), 1.0);
        assert!((riesz_covariance([0.0, 0.0, 4.0], 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((riesz_covariance([3.0, 4.0, 0.0], 1.0).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(riesz_covariance([0.0; 3], 1.0), Err(Error::SingularKernel)));
        assert!(matches!(riesz_covariance([1.0, 0.0, 0.0], 2.0), Err(Error::Parameter { .. })));
        assert!(riesz_covariance([1.0, 0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn weight_examples() {
        let g = TorusGrid::new(1.0, 8, 1.0, 8).unwrap();
        assert_eq!(spectral_weight([0, 0, 0], &g, 1.0).unwrap(), 0.0);
        assert!((spectral_weight([1, 0, 0], &g, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((spectral_weight([2, 0, 0], &g, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(spectral_weight([4, 0, 0], &g, 1.0).is_err());
        let m = NoiseModel::new(g, 1.0).unwrap();
        assert_eq!(m.zero_mode_weight(), 0.0);
        assert!(m.weights().iter().all(|w| w.is_finite() && *w >= 0.0));
    }

    #[test]
    fn hnorm_direct_cases() {
        let g = TorusGrid::new(1.0, 8, 1.0, 8).unwrap();
        let m = NoiseModel::new(g, 1.0).unwrap();
        let zeros = vec![Complex64::default(); g.len()];
        assert_eq!(hnorm_sq(&zeros, &m).unwrap(), 0.0);

        let a = 0.7;
        let mut c = zeros.clone();
        c[g.mode_index([1, 0, 0]).unwrap()] = Complex64::new(a, 0.0);
        c[g.mode_index([-1, 0, 0]).unwrap()] = Complex64::new(a, 0.0);
        let mu = spectral_weight([1, 0, 0], &g, 1.0).unwrap();
        assert!((hnorm_sq(&c, &m).unwrap() - 2.0 * mu * a * a).abs() < 1e-14);

        c[g.mode_index([-1, 0, 0]).unwrap()] = Complex64::new(0.0, a);
        assert!(matches!(hnorm_sq(&c, &m), Err(Error::Validation(_))));
    }
}
