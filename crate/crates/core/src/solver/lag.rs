//! Dyadic lags `t_n` and lagged snapshots obtained by free wave propagation.

use super::state::{FieldState, Trajectory};
use super::stepper::sinc_weight;
use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::grid::TorusGrid;

/// `t_n = max(underline t_n - 2^-n T, 0)`, where `underline t_n` is the
/// largest `k 2^-n T <= t` with `1 <= k <= 2^n - 1`, and `t_n = 0` when no
/// such `k` exists.
pub fn dyadic_lag(t: f64, n: u32, horizon: f64) -> f64 {
    debug_assert!((0.0..=horizon * (1.0 + 1e-12)).contains(&t));
    let cells = 2f64.powi(n as i32);
    let delta = horizon / cells;
    let k = (t / delta + 1e-9).floor().min(cells - 1.0);
    if k < 1.0 {
        0.0
    } else {
        (k * delta - delta).max(0.0)
    }
}

/// Free wave flow `u(t0 + tau) = cos(w tau) u(t0) + sin(w tau)/w v(t0)`.
#[derive(Debug, Clone)]
pub struct FreePropagator {
    fft: Fft3,
    omega: Vec<f64>,
}

impl FreePropagator {
    pub fn new(grid: &TorusGrid) -> Self {
        let omega = (0..grid.len()).map(|i| 2.0 * std::f64::consts::PI * grid.wavenumber(i)).collect();
        Self { fft: Fft3::new(grid.points()), omega }
    }

    /// Displacement after propagating `state` freely for `tau`.
    pub fn displacement(&self, state: &FieldState, tau: f64) -> Vec<f64> {
        if tau == 0.0 && !state.u.is_empty() {
            return state.u.clone();
        }
        let spec: Vec<_> = self
            .omega
            .iter()
            .zip(state.u_hat.iter().zip(&state.v_hat))
            .map(|(&w, (&u, &v))| (w * tau).cos() * u + sinc_weight(w, tau) * v)
            .collect();
        self.fft.inverse_real(&spec)
    }
}

/// The solution at `t` with every source integral truncated to `[0, t_n]`.
pub fn lagged_snapshot(traj: &Trajectory, t: f64, n: u32) -> Result<Vec<f64>> {
    lagged_snapshot_with(&FreePropagator::new(&traj.grid), traj, t, n)
}

pub fn lagged_snapshot_with(prop: &FreePropagator, traj: &Trajectory, t: f64, n: u32) -> Result<Vec<f64>> {
    let horizon = traj.grid.horizon();
    if !(t >= 0.0 && t <= horizon * (1.0 + 1e-12)) {
        return Err(Error::parameter("t", format!("must lie in [0, {horizon}], got {t}")));
    }
    let tn = dyadic_lag(t, n, horizon);
    let state = traj.state_at(tn).ok_or_else(|| {
        Error::config("save_grid", format!("lag point t_n = {tn} (t = {t}, n = {n}) is not on the save grid"))
    })?;
    Ok(prop.displacement(state, t - tn))
}
