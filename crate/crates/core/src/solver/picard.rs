//! Picard iteration of the mild equation on the whole time grid at once.
//!
//! Each iterate evaluates every source with the previous iterate inside and
//! sums the Duhamel contributions globally, with the same per-source weights
//! as the stepper. Sources are causal, so on `M` steps the iteration settles
//! after at most `M + 1` sweeps.

use num_complex::Complex64;

use super::drive::DriveSpec;
use super::state::{FieldState, Trajectory};
use super::stepper::{sinc_weight, KickRule, Solver};
use crate::error::{Error, Result};
use crate::noise::BrownianTableau;

#[derive(Debug, Clone)]
pub struct PicardReport {
    pub trajectory: Trajectory,
    /// Sup distance between successive iterates.
    pub distances: Vec<f64>,
    pub converged: bool,
}

pub fn picard_reference(
    solver: &Solver,
    drive: &DriveSpec,
    tableau: Option<&BrownianTableau>,
    iterations: usize,
) -> Result<PicardReport> {
    let grid = *solver.grid();
    if grid.points() > 8 || grid.steps() > 16 {
        return Err(Error::config("picard", "reference instances need N <= 8 and at most 16 steps"));
    }
    if iterations == 0 {
        return Err(Error::config("picard.iterations", "must be at least 1"));
    }
    let forcings = solver.forcings(drive, tableau)?;
    let table = solver.table();
    let fft = solver.fft();
    let dt = grid.dt();
    let steps = grid.steps();
    let len = grid.len();
    let offset = match solver.options().kick {
        KickRule::Left => 0.0,
        KickRule::Midpoint => 0.5 * dt,
    };

    let mut z: Vec<Vec<f64>> = vec![vec![0.0; len]; steps + 1];
    let mut spectra: Vec<(Vec<Complex64>, Vec<Complex64>)> =
        vec![(vec![Complex64::default(); len], vec![Complex64::default(); len]); steps + 1];
    let mut distances = Vec::new();
    let mut converged = false;

    for _ in 0..iterations {
        let sources: Vec<Vec<Complex64>> = (0..steps)
            .map(|i| {
                let (imp, rate) = solver.sources(&z[i], &forcings[i]);
                (0..len)
                    .map(|k| {
                        imp.as_ref().map_or(Complex64::default(), |s| s[k])
                            + rate.as_ref().map_or(Complex64::default(), |r| r[k] * table.rate[k])
                    })
                    .collect()
            })
            .collect();

        let mut next = Vec::with_capacity(steps + 1);
        let mut next_spectra = Vec::with_capacity(steps + 1);
        for m in 0..=steps {
            let mut uh = vec![Complex64::default(); len];
            let mut vh = vec![Complex64::default(); len];
            for (i, s) in sources.iter().enumerate().take(m) {
                let tau = (m - i) as f64 * dt - offset;
                for k in 0..len {
                    let w = table.omega[k];
                    uh[k] += sinc_weight(w, tau) * s[k];
                    vh[k] += (w * tau).cos() * s[k];
                }
            }
            next.push(fft.inverse_real(&uh));
            next_spectra.push((uh, vh));
        }

        let mut dist: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (a, b) in next.iter().zip(&z) {
            for (x, y) in a.iter().zip(b) {
                dist = dist.max((x - y).abs());
                scale = scale.max(x.abs());
            }
        }
        if !dist.is_finite() {
            return Err(Error::NumericalBlowup { step: steps });
        }
        distances.push(dist);
        z = next;
        spectra = next_spectra;
        if dist <= 1e-14 * (1.0 + scale) {
            converged = true;
            break;
        }
        let d = &distances;
        if d.len() >= 4 && d[d.len() - 4..].windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::NonContraction { distances: distances.clone() });
        }
    }

    let states = spectra
        .into_iter()
        .zip(z)
        .enumerate()
        .map(|(m, ((uh, vh), u))| {
            let v = fft.inverse_real(&vh);
            FieldState { time: grid.time(m), u, v, u_hat: uh, v_hat: vh }
        })
        .collect();
    let mut descriptor = drive.descriptor();
    if let Some(t) = tableau {
        descriptor.tableau_seed = t.seed();
        descriptor.tableau_level = Some(t.level());
    }
    let trajectory = Trajectory::new(grid, solver.model().beta(), descriptor, states)?;
    Ok(PicardReport { trajectory, distances, converged })
}
