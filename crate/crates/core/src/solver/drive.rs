//! What drives a run: the Gaussian noise, its smoothing `w^n`, a control
//! `h` in `H_T`, and the Girsanov shift of the noise path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TorusGrid;

/// A control path `h = sum_j h_j(t) e_j`, piecewise constant on time steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Control {
    dim: usize,
    steps: usize,
    /// Row-major `steps x dim`: the value of every direction on each step.
    values: Vec<f64>,
}

impl Control {
    pub fn new(dim: usize, steps: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || steps == 0 {
            return Err(Error::config("control", "dimension and step count must be positive"));
        }
        if values.len() != dim * steps {
            return Err(Error::config("control", format!("expected {} values, got {}", dim * steps, values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("control", "values must be finite"));
        }
        Ok(Self { dim, steps, values })
    }

    pub fn zero(dim: usize, steps: usize) -> Result<Self> {
        Self::new(dim, steps, vec![0.0; dim * steps])
    }

    /// Samples `h_j` at step midpoints.
    pub fn from_fn<F: Fn(usize, f64) -> f64>(dim: usize, grid: &TorusGrid, h: F) -> Result<Self> {
        let dt = grid.dt();
        let steps = grid.steps();
        let mut values = Vec::with_capacity(dim * steps);
        for m in 0..steps {
            let t = (m as f64 + 0.5) * dt;
            values.extend((0..dim).map(|j| h(j, t)));
        }
        Self::new(dim, steps, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Values of all directions on step `m`.
    pub fn at_step(&self, m: usize) -> &[f64] {
        &self.values[m * self.dim..(m + 1) * self.dim]
    }

    /// `||h||_{H_T}^2 = sum_j int_0^T h_j(t)^2 dt`.
    pub fn norm_sq(&self, dt: f64) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * dt
    }

    /// Pointwise sum; dimensions may differ.
    pub fn add(&self, other: &Control) -> Result<Control> {
        if self.steps != other.steps {
            return Err(Error::config("control", "step counts differ"));
        }
        let dim = self.dim.max(other.dim);
        let mut values = vec![0.0; dim * self.steps];
        for m in 0..self.steps {
            for (j, v) in self.at_step(m).iter().enumerate() {
                values[m * dim + j] += v;
            }
            for (j, v) in other.at_step(m).iter().enumerate() {
                values[m * dim + j] += v;
            }
        }
        Control::new(dim, self.steps, values)
    }

    pub fn scaled(&self, factor: f64) -> Control {
        Control { values: self.values.iter().map(|v| v * factor).collect(), ..self.clone() }
    }
}

/// The Girsanov shift `T_n^h`: the noise path `W` is replaced by
/// `W + int h - w^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shift {
    pub control: Control,
    pub level: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DriveSpec {
    /// Drive the noise coefficient with the Gaussian increments.
    pub stochastic: bool,
    /// Drive the smoothed coefficient with `w^n` instead of the noise.
    pub wz_level: Option<u32>,
    pub control: Option<Control>,
    pub girsanov: Option<Shift>,
}

impl DriveSpec {
    pub fn stochastic() -> Self {
        Self { stochastic: true, ..Self::default() }
    }

    pub fn wong_zakai(level: u32) -> Self {
        Self { stochastic: true, wz_level: Some(level), ..Self::default() }
    }

    pub fn controlled(control: Control) -> Self {
        Self { control: Some(control), ..Self::default() }
    }

    /// Dyadic level the attached tableau must resolve (0 when none is needed).
    pub fn required_level(&self) -> u32 {
        self.wz_level.into_iter().chain(self.girsanov.as_ref().map(|s| s.level)).max().unwrap_or(0)
    }

    pub fn needs_tableau(&self) -> bool {
        self.stochastic || self.wz_level.is_some() || self.girsanov.is_some()
    }

    pub fn descriptor(&self) -> DriveDescriptor {
        DriveDescriptor {
            stochastic: self.stochastic,
            wz_level: self.wz_level,
            control_dim: self.control.as_ref().map(Control::dim),
            girsanov_level: self.girsanov.as_ref().map(|s| s.level),
            tableau_seed: None,
            tableau_level: None,
        }
    }
}

/// Serializable summary of a drive and the noise realization it used.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DriveDescriptor {
    pub stochastic: bool,
    pub wz_level: Option<u32>,
    pub control_dim: Option<usize>,
    pub girsanov_level: Option<u32>,
    pub tableau_seed: Option<u64>,
    pub tableau_level: Option<u32>,
}

/// Applies `T_n^h` to a stochastic drive.
///
/// Solving with the result realizes `u o T_n^h`: every step receives
/// `Delta W_j + int_step h_j - dW_j^n/dt dt` in place of `Delta W_j`.
pub fn girsanov_shift(drive: &DriveSpec, h: Control, n: u32) -> Result<DriveSpec> {
    if !drive.stochastic {
        return Err(Error::config("girsanov_shift", "the shift acts on a stochastic drive"));
    }
    if drive.girsanov.is_some() {
        return Err(Error::config("girsanov_shift", "drive is already shifted"));
    }
    if n == 0 {
        return Err(Error::config("girsanov_shift", "level must be at least 1"));
    }
    Ok(DriveSpec { girsanov: Some(Shift { control: h, level: n }), ..drive.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn control_norm_and_sum() {
        let grid = TorusGrid::new(1.0, 4, 1.0, 8).unwrap();
        let h = Control::from_fn(2, &grid, |j, _| if j == 0 { 2.0 } else { 0.0 }).unwrap();
        assert!((h.norm_sq(grid.dt()) - 4.0).abs() < 1e-14);
        let g = Control::from_fn(3, &grid, |j, t| j as f64 * t).unwrap();
        let s = h.add(&g).unwrap();
        assert_eq!(s.dim(), 3);
        assert_eq!(s.at_step(3)[0], 2.0);
        assert!((s.at_step(3)[2] - 2.0 * 3.5 / 8.0).abs() < 1e-15);
        assert!(Control::new(2, 3, vec![0.0; 5]).is_err());
        assert!(Control::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn shift_requires_noise() {
        let h = Control::zero(1, 4).unwrap();
        assert!(girsanov_shift(&DriveSpec::default(), h.clone(), 2).is_err());
        let d = girsanov_shift(&DriveSpec::stochastic(), h.clone(), 2).unwrap();
        assert_eq!(d.required_level(), 2);
        assert!(girsanov_shift(&d, h, 2).is_err());
    }
}
