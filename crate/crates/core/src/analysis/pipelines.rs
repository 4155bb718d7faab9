//! Per-replica pipelines: each takes one tableau and returns the quantities
//! the ensemble reports reduce.

use std::collections::BTreeSet;

use super::convergence::{coupled_distance, window_distance, LagDiscrepancy};
use super::holder::{HolderWindow, WindowSampler, WindowSamples};
use crate::error::{Error, Result};
use crate::noise::{localization_indicator, Basis, BrownianTableau, LocalizationParams, NoiseModel};
use crate::solver::{
    dyadic_lag, girsanov_shift, lagged_snapshot_with, step_of, Coefficients, Control, DriveSpec, FreePropagator,
    Nonlinearity, SaveGrid, Solver, SolverOptions, Trajectory,
};

fn sample_window(
    solver: &Solver,
    drive: &DriveSpec,
    tableau: Option<&BrownianTableau>,
    window: &HolderWindow,
) -> Result<WindowSamples> {
    let grid = solver.grid();
    let mut sampler = WindowSampler::new(grid, window, tableau.and_then(BrownianTableau::seed))?;
    solver.run(drive, tableau, &window.save_grid(grid)?, |s| {
        sampler.record(s);
        Ok(())
    })?;
    sampler.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WzReplica {
    /// `||X_n - X||_{rho,t0,K}` per level.
    pub distances: Vec<f64>,
    /// `1_{L_n(T)}` per level.
    pub indicators: Vec<bool>,
}

/// Solves `X` and every `X_n` on one tableau and measures their distances.
pub fn wz_replica(
    solver: &Solver,
    levels: &[u32],
    window: &HolderWindow,
    tableau: &BrownianTableau,
    params: &LocalizationParams,
) -> Result<WzReplica> {
    let limit = sample_window(solver, &DriveSpec::stochastic(), Some(tableau), window)?;
    let mut distances = Vec::with_capacity(levels.len());
    let mut indicators = Vec::with_capacity(levels.len());
    for &n in levels {
        let approx = sample_window(solver, &DriveSpec::wong_zakai(n), Some(tableau), window)?;
        distances.push(coupled_distance(&approx, &limit, window)?);
        indicators.push(localization_indicator(&tableau.coarsen(n)?, solver.grid().horizon(), params)?);
    }
    Ok(WzReplica { distances, indicators })
}

/// Solvers and the deterministic skeleton shared by every support replica.
#[derive(Debug, Clone)]
pub struct SupportSetup {
    /// Noise and smoothed driver share `sigma` (`u` and `Phi^{w^n}`).
    pub coupled: Solver,
    /// Noise coefficient `sigma` only, run under `T_n^h`.
    pub shifted: Solver,
    pub control: Control,
    /// `Phi^h` on the window.
    pub skeleton: WindowSamples,
    pub window: HolderWindow,
}

impl SupportSetup {
    pub fn new(
        model: NoiseModel,
        basis: Basis,
        sigma: Nonlinearity,
        drift: Nonlinearity,
        control: Control,
        window: HolderWindow,
        options: SolverOptions,
    ) -> Result<Self> {
        let coupled = Solver::new(model.clone(), basis.clone(), Coefficients::wong_zakai(sigma, drift), options)?;
        let shifted = Solver::new(model.clone(), basis.clone(), Coefficients::linear_noise(sigma, drift), options)?;
        let skeleton_solver = Solver::new(model, basis, Coefficients::skeleton(sigma, drift), options)?;
        let skeleton = sample_window(&skeleton_solver, &DriveSpec::controlled(control.clone()), None, &window)?;
        Ok(Self { coupled, shifted, control, skeleton, window })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportReplica {
    /// `||u - Phi^{w^n}||` per level.
    pub smoothed: Vec<f64>,
    /// `||u o T_n^h - Phi^h||` per level.
    pub shifted: Vec<f64>,
}

pub fn support_replica(setup: &SupportSetup, levels: &[u32], tableau: &BrownianTableau) -> Result<SupportReplica> {
    let window = &setup.window;
    let u = sample_window(&setup.coupled, &DriveSpec::stochastic(), Some(tableau), window)?;
    let mut smoothed = Vec::with_capacity(levels.len());
    let mut shifted = Vec::with_capacity(levels.len());
    for &n in levels {
        let phi_wn = sample_window(&setup.coupled, &DriveSpec::wong_zakai(n), Some(tableau), window)?;
        smoothed.push(coupled_distance(&u, &phi_wn, window)?);
        let drive = girsanov_shift(&DriveSpec::stochastic(), setup.control.clone(), n)?;
        let moved = sample_window(&setup.shifted, &drive, Some(tableau), window)?;
        shifted.push(window_distance(&moved, &setup.skeleton, window)?);
    }
    Ok(SupportReplica { smoothed, shifted })
}

/// Solves `X` once and adds `|X(t) - X(t, t_n)|^p` for every level and lag
/// time to `acc`.
pub fn lag_replica(solver: &Solver, tableau: &BrownianTableau, acc: &mut LagDiscrepancy) -> Result<()> {
    let grid = *solver.grid();
    let horizon = grid.horizon();
    let mut steps = BTreeSet::from([0]);
    for &t in acc.times() {
        steps.insert(step_of(&grid, t)?);
        for &n in acc.levels() {
            steps.insert(
                step_of(&grid, dyadic_lag(t, n, horizon))
                    .map_err(|_| Error::config("levels", format!("lag of level {n} is not a step boundary")))?,
            );
        }
    }
    let save = SaveGrid::from_steps(&grid, steps)?;
    let traj: Trajectory = solver.solve(&DriveSpec::stochastic(), Some(tableau), &save)?;
    let prop = FreePropagator::new(&grid);
    let times = acc.times().to_vec();
    let levels = acc.levels().to_vec();
    for (ti, &t) in times.iter().enumerate() {
        let full = &traj.state_at(t).expect("saved lag time").u;
        for (li, &n) in levels.iter().enumerate() {
            let lagged = lagged_snapshot_with(&prop, &traj, t, n)?;
            acc.add(li, ti, full, &lagged);
        }
    }
    acc.finish_replica();
    Ok(())
}
