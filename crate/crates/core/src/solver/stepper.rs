//! Trigonometric time stepping of the mild equations.
//!
//! Each Fourier mode evolves exactly under the free wave flow. Sources enter
//! in two kinds: impulses (noise increments, whose coefficient is frozen at
//! the left endpoint of the step) and rates (smoothed driver, control and
//! drift, also frozen at the left endpoint). A source of amplitude `S`
//! applied at time `s` inside the step contributes `sin(w (t+ - s))/w S` to
//! `u_hat` and `cos(w (t+ - s)) S` to `v_hat`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::coefficients::{Coefficients, Nonlinearity};
use super::drive::{Control, DriveDescriptor, DriveSpec};
use super::state::{FieldState, SaveGrid, Trajectory};
use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::grid::TorusGrid;
use crate::noise::{Basis, BrownianTableau, NoiseModel, RegularizedNoise};

/// Where the stochastic kick of a step is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KickRule {
    /// Every source acts at the left endpoint with the full step weights.
    Left,
    /// Impulses act at the step midpoint; rates are integrated exactly over
    /// the step.
    #[default]
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub kick: KickRule,
    /// Zero source modes outside the 2/3 band before they enter the update.
    pub dealias: bool,
}

/// `sin(w x) / w`, equal to `x` at `w = 0`.
#[inline]
pub(crate) fn sinc_weight(omega: f64, x: f64) -> f64 {
    if omega == 0.0 {
        x
    } else {
        (omega * x).sin() / omega
    }
}

/// Per-mode constants of the scheme.
#[derive(Debug, Clone)]
pub(crate) struct ModeTable {
    pub omega: Vec<f64>,
    pub cos_dt: Vec<f64>,
    pub sin_dt: Vec<f64>,
    pub omega_sin_dt: Vec<f64>,
    pub kick_u: Vec<f64>,
    pub kick_v: Vec<f64>,
    /// Impulse-equivalent of a unit rate held over one step.
    pub rate: Vec<f64>,
    pub mask: Option<Vec<bool>>,
}

impl ModeTable {
    pub fn new(grid: &TorusGrid, options: &SolverOptions) -> Self {
        let dt = grid.dt();
        let n = grid.len();
        let omega: Vec<f64> = (0..n).map(|i| 2.0 * std::f64::consts::PI * grid.wavenumber(i)).collect();
        let lag = match options.kick {
            KickRule::Left => dt,
            KickRule::Midpoint => 0.5 * dt,
        };
        let rate = omega
            .iter()
            .map(|&w| match options.kick {
                KickRule::Left => dt,
                KickRule::Midpoint => 2.0 * sinc_weight(w, 0.5 * dt),
            })
            .collect();
        let mask = options.dealias.then(|| {
            let cut = grid.points() as i64 / 3;
            (0..n).map(|i| grid.mode(i).iter().all(|c| c.abs() <= cut)).collect()
        });
        Self {
            cos_dt: omega.iter().map(|w| (w * dt).cos()).collect(),
            sin_dt: omega.iter().map(|&w| sinc_weight(w, dt)).collect(),
            omega_sin_dt: omega.iter().map(|w| w * (w * dt).sin()).collect(),
            kick_u: omega.iter().map(|&w| sinc_weight(w, lag)).collect(),
            kick_v: omega.iter().map(|w| (w * lag).cos()).collect(),
            rate,
            mask,
            omega,
        }
    }
}

/// Source amplitudes of one step, all in basis coordinates.
#[derive(Debug, Clone, Default)]
pub struct StepForcing {
    /// Noise increments `Delta W_j` over the step.
    pub noise: Option<Vec<f64>>,
    /// Smoothed driver `dW_j^n/dt`; when present it carries the smoothed
    /// coefficient, otherwise that coefficient joins the noise one.
    pub smoothed: Option<Vec<f64>>,
    /// Control `h_j` on the step.
    pub control: Option<Vec<f64>>,
    /// Girsanov rate `h_j - dW_j^n/dt`, carried by the noise coefficient.
    pub shift: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Solver {
    model: NoiseModel,
    basis: Basis,
    coeffs: Coefficients,
    options: SolverOptions,
    fft: Fft3,
    table: ModeTable,
}

/// Noise realization resolved against the grid for one solve.
struct Resolved<'a> {
    noise: Option<BrownianTableau>,
    smoothed: Option<BrownianTableau>,
    shift: Option<(&'a Control, BrownianTableau)>,
    control: Option<&'a Control>,
    descriptor: DriveDescriptor,
}

impl Solver {
    pub fn new(model: NoiseModel, basis: Basis, coeffs: Coefficients, options: SolverOptions) -> Result<Self> {
        let grid = *model.grid();
        if basis.grid_len() != grid.len() {
            return Err(Error::config("basis", "basis was built for a different grid"));
        }
        coeffs.validate()?;
        let table = ModeTable::new(&grid, &options);
        Ok(Self { fft: Fft3::new(grid.points()), model, basis, coeffs, options, table })
    }

    pub fn grid(&self) -> &TorusGrid {
        self.model.grid()
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coeffs
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn fft(&self) -> &Fft3 {
        &self.fft
    }

    pub(crate) fn table(&self) -> &ModeTable {
        &self.table
    }

    /// Coefficient multiplying the noise given whether a smoothed driver is present.
    fn noise_coefficient(&self, smoothed_driven: bool) -> (Nonlinearity, Option<Nonlinearity>) {
        let a = self.coeffs.noise;
        let b = self.coeffs.smoothed;
        if smoothed_driven || b.is_zero() {
            (a, None)
        } else {
            (a, Some(b))
        }
    }

    fn basis_field(&self, amplitudes: &[f64]) -> Vec<f64> {
        let mut spec = vec![Complex64::default(); self.grid().len()];
        self.basis.synthesize_into(amplitudes, &mut spec);
        self.fft.inverse_real(&spec)
    }

    fn masked(&self, mut spec: Vec<Complex64>) -> Vec<Complex64> {
        if let Some(mask) = &self.table.mask {
            spec.iter_mut().zip(mask).filter(|(_, &keep)| !keep).for_each(|(c, _)| *c = Complex64::default());
        }
        spec
    }

    /// Series coefficients of the impulse and rate sources at displacement `u`.
    pub(crate) fn sources(&self, u: &[f64], f: &StepForcing) -> (Option<Vec<Complex64>>, Option<Vec<Complex64>>) {
        let (a, b_on_noise) = self.noise_coefficient(f.smoothed.is_some());
        let noise_coef = |x: f64| a.eval(x) + b_on_noise.map_or(0.0, |b| b.eval(x));
        let noise_active = !a.is_zero() || b_on_noise.is_some();

        let impulse = match &f.noise {
            Some(dw) if noise_active => {
                let field = self.basis_field(dw);
                let src: Vec<f64> = u.iter().zip(&field).map(|(&x, &w)| noise_coef(x) * w).collect();
                Some(self.masked(self.fft.forward_real(&src)))
            }
            _ => None,
        };

        let mut rate: Option<Vec<f64>> = None;
        let mut add = |coef: &dyn Fn(f64) -> f64, field: Option<&[f64]>| {
            let r = rate.get_or_insert_with(|| vec![0.0; u.len()]);
            match field {
                Some(w) => r.iter_mut().zip(u).zip(w).for_each(|((r, &x), &w)| *r += coef(x) * w),
                None => r.iter_mut().zip(u).for_each(|(r, &x)| *r += coef(x)),
            }
        };
        if let Some(w) = &f.smoothed {
            let b = self.coeffs.smoothed;
            if !b.is_zero() {
                add(&|x| b.eval(x), Some(&self.basis_field(w)));
            }
        }
        if let Some(h) = &f.control {
            let d = self.coeffs.control;
            if !d.is_zero() {
                add(&|x| d.eval(x), Some(&self.basis_field(h)));
            }
        }
        if let Some(s) = &f.shift {
            if noise_active {
                add(&noise_coef, Some(&self.basis_field(s)));
            }
        }
        let b = self.coeffs.drift;
        if !b.is_zero() {
            add(&|x| b.eval(x), None);
        }
        let rate = rate.map(|r| self.masked(self.fft.forward_real(&r)));
        (impulse, rate)
    }

    /// Advances the spectral state by one step; returns the new coefficients
    /// and the new physical displacement.
    fn advance(
        &self,
        u: &[f64],
        u_hat: &[Complex64],
        v_hat: &[Complex64],
        forcing: &StepForcing,
        step: usize,
    ) -> Result<(Vec<Complex64>, Vec<Complex64>, Vec<f64>)> {
        let t = &self.table;
        let (impulse, rate) = self.sources(u, forcing);
        let n = u_hat.len();
        let mut nu = Vec::with_capacity(n);
        let mut nv = Vec::with_capacity(n);
        for k in 0..n {
            let mut s = Complex64::default();
            if let Some(imp) = &impulse {
                s += imp[k];
            }
            if let Some(r) = &rate {
                s += r[k] * t.rate[k];
            }
            nu.push(t.cos_dt[k] * u_hat[k] + t.sin_dt[k] * v_hat[k] + t.kick_u[k] * s);
            nv.push(-t.omega_sin_dt[k] * u_hat[k] + t.cos_dt[k] * v_hat[k] + t.kick_v[k] * s);
        }
        let u_new = self.fft.inverse_real(&nu);
        if u_new.iter().any(|x| !x.is_finite()) || nv.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NumericalBlowup { step });
        }
        Ok((nu, nv, u_new))
    }

    /// One step of length `dt` from `state`.
    pub fn step(&self, state: &FieldState, forcing: &StepForcing, dt: f64) -> Result<FieldState> {
        let grid = self.grid();
        if (dt - grid.dt()).abs() > 1e-12 * grid.dt() {
            return Err(Error::parameter("dt", format!("must equal the grid step {}, got {dt}", grid.dt())));
        }
        if state.time + dt > grid.horizon() * (1.0 + 1e-12) {
            return Err(Error::parameter("dt", "step would pass the horizon"));
        }
        let step = (state.time / dt).round() as usize;
        let (u_hat, v_hat, u) = self.advance(&state.u, &state.u_hat, &state.v_hat, forcing, step)?;
        let v = self.fft.inverse_real(&v_hat);
        Ok(FieldState { time: grid.time(step + 1), u, v, u_hat, v_hat })
    }

    fn resolve<'a>(&self, drive: &'a DriveSpec, tableau: Option<&BrownianTableau>) -> Result<Resolved<'a>> {
        let grid = self.grid();
        let steps_level = grid.step_level();
        let j = self.basis.len();
        let mut descriptor = drive.descriptor();

        let check_control = |h: &Control, key: &str| -> Result<()> {
            if h.dim() > j {
                return Err(Error::config(key, format!("h has {} directions, the basis truncation only {j}", h.dim())));
            }
            if h.steps() != grid.steps() {
                return Err(Error::config(key, format!("h has {} steps, the grid {}", h.steps(), grid.steps())));
            }
            Ok(())
        };
        if let Some(h) = &drive.control {
            check_control(h, "drive.control")?;
        }
        if let Some(s) = &drive.girsanov {
            check_control(&s.control, "drive.girsanov")?;
            if !drive.stochastic {
                return Err(Error::config("drive.girsanov", "the shift acts on a stochastic drive"));
            }
        }
        for (key, level) in
            [("drive.wz_level", drive.wz_level), ("drive.girsanov", drive.girsanov.as_ref().map(|s| s.level))]
        {
            if let Some(n) = level {
                if n == 0 || n > steps_level {
                    return Err(Error::config(
                        key,
                        format!("level {n} must lie in 1..={steps_level} so cells align with steps"),
                    ));
                }
                if n as usize > j {
                    return Err(Error::config(key, format!("level {n} exceeds the basis truncation {j}")));
                }
            }
        }

        if !drive.needs_tableau() {
            return Ok(Resolved {
                noise: None,
                smoothed: None,
                shift: None,
                control: drive.control.as_ref(),
                descriptor,
            });
        }
        let tab = tableau.ok_or_else(|| Error::config("drive", "this drive needs a Brownian tableau"))?;
        if (tab.horizon() - grid.horizon()).abs() > 1e-12 * grid.horizon() {
            return Err(Error::config("tableau", "horizon differs from the grid"));
        }
        descriptor.tableau_seed = tab.seed();
        descriptor.tableau_level = Some(tab.level());
        let at_level = |n: u32| -> Result<BrownianTableau> {
            if tab.level() < n {
                return Err(Error::config("tableau", format!("level {} is coarser than the needed {n}", tab.level())));
            }
            tab.coarsen(n)
        };
        let noise = if drive.stochastic {
            if tab.truncation() < j {
                return Err(Error::config(
                    "tableau",
                    format!("{} directions cannot drive a basis of {j}", tab.truncation()),
                ));
            }
            Some(at_level(steps_level)?)
        } else {
            None
        };
        let smoothed = drive.wz_level.map(at_level).transpose()?;
        let shift = match &drive.girsanov {
            Some(s) => Some((&s.control, at_level(s.level)?)),
            None => None,
        };
        Ok(Resolved { noise, smoothed, shift, control: drive.control.as_ref(), descriptor })
    }

    fn forcing_at(&self, r: &Resolved<'_>, m: usize) -> Result<StepForcing> {
        let j = self.basis.len();
        let steps_level = self.grid().step_level();
        let cell = |tab: &BrownianTableau| m >> (steps_level - tab.level());
        let noise = r.noise.as_ref().map(|tab| (0..j).map(|d| tab.increment(d, m)).collect());
        let smoothed = match &r.smoothed {
            Some(tab) => Some(RegularizedNoise::new(tab)?.cell_values(cell(tab))),
            None => None,
        };
        let control = r.control.map(|h| h.at_step(m).to_vec());
        let shift = match &r.shift {
            Some((h, tab)) => {
                let wn = RegularizedNoise::new(tab)?.cell_values(cell(tab));
                let hv = h.at_step(m);
                let dim = hv.len().max(wn.len());
                Some((0..dim).map(|d| hv.get(d).copied().unwrap_or(0.0) - wn.get(d).copied().unwrap_or(0.0)).collect())
            }
            None => None,
        };
        Ok(StepForcing { noise, smoothed, control, shift })
    }

    /// Per-step forcings of a drive on a realization.
    pub fn forcings(&self, drive: &DriveSpec, tableau: Option<&BrownianTableau>) -> Result<Vec<StepForcing>> {
        let r = self.resolve(drive, tableau)?;
        (0..self.grid().steps()).map(|m| self.forcing_at(&r, m)).collect()
    }

    /// Runs the drive and hands every saved state to `visit`, in time order.
    pub fn run<F>(
        &self,
        drive: &DriveSpec,
        tableau: Option<&BrownianTableau>,
        save: &SaveGrid,
        mut visit: F,
    ) -> Result<DriveDescriptor>
    where
        F: FnMut(&FieldState) -> Result<()>,
    {
        let r = self.resolve(drive, tableau)?;
        let grid = *self.grid();
        let mut state = FieldState::zero(&grid);
        if save.contains(0) {
            visit(&state)?;
        }
        let quiet = self.coeffs.is_zero();
        for m in 0..grid.steps() {
            let (u_hat, v_hat, u) = if quiet {
                (state.u_hat, state.v_hat, state.u)
            } else {
                let forcing = self.forcing_at(&r, m)?;
                self.advance(&state.u, &state.u_hat, &state.v_hat, &forcing, m)?
            };
            let v = if save.contains(m + 1) { self.fft.inverse_real(&v_hat) } else { Vec::new() };
            state = FieldState { time: grid.time(m + 1), u, v, u_hat, v_hat };
            if save.contains(m + 1) {
                visit(&state)?;
            }
        }
        Ok(r.descriptor)
    }

    pub fn solve(&self, drive: &DriveSpec, tableau: Option<&BrownianTableau>, save: &SaveGrid) -> Result<Trajectory> {
        let mut states = Vec::new();
        let descriptor = self.run(drive, tableau, save, |s| {
            states.push(s.clone());
            Ok(())
        })?;
        Trajectory::new(*self.grid(), self.model.beta(), descriptor, states)
    }

    /// Tableau resolving every step of the grid with enough directions for
    /// this solver and drive.
    pub fn sample_tableau(&self, drive: &DriveSpec, seed: u64) -> Result<BrownianTableau> {
        let grid = self.grid();
        let truncation = self.basis.len().max(drive.required_level() as usize);
        BrownianTableau::sample(grid.step_level().max(1), truncation, grid.horizon(), seed)
    }

    pub fn solve_seeded(&self, drive: &DriveSpec, seed: u64, save: &SaveGrid) -> Result<Trajectory> {
        if drive.needs_tableau() {
            let tab = self.sample_tableau(drive, seed)?;
            self.solve(drive, Some(&tab), save)
        } else {
            self.solve(drive, None, save)
        }
    }
}
