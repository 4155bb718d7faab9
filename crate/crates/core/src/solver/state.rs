//! Field states, save grids and trajectories with their binary container.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::drive::DriveDescriptor;
use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::grid::TorusGrid;

const MAGIC: u64 = u64::from_le_bytes(*b"W3DTRAJ1");

/// Displacement and velocity at one time, in physical and series form.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub time: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub u_hat: Vec<Complex64>,
    pub v_hat: Vec<Complex64>,
}

impl FieldState {
    /// Null initial data.
    pub fn zero(grid: &TorusGrid) -> Self {
        let n = grid.len();
        Self {
            time: 0.0,
            u: vec![0.0; n],
            v: vec![0.0; n],
            u_hat: vec![Complex64::default(); n],
            v_hat: vec![Complex64::default(); n],
        }
    }

    pub fn from_spectral(time: f64, u_hat: Vec<Complex64>, v_hat: Vec<Complex64>, fft: &Fft3) -> Self {
        let u = fft.inverse_real(&u_hat);
        let v = fft.inverse_real(&v_hat);
        Self { time, u, v, u_hat, v_hat }
    }

    /// Largest departure from `c_{-k} = conj(c_k)` over both fields.
    pub fn hermitian_defect(&self, grid: &TorusGrid) -> f64 {
        let mut worst: f64 = 0.0;
        for idx in 0..grid.len() {
            let c = grid.conjugate_index(idx);
            worst = worst.max((self.u_hat[idx] - self.u_hat[c].conj()).norm());
            worst = worst.max((self.v_hat[idx] - self.v_hat[c].conj()).norm());
        }
        worst
    }

    /// Largest mismatch between the physical fields and the synthesis of the
    /// stored coefficients.
    pub fn round_trip_error(&self, fft: &Fft3) -> f64 {
        let u = fft.inverse_real(&self.u_hat);
        let v = fft.inverse_real(&self.v_hat);
        self.u.iter().zip(&u).chain(self.v.iter().zip(&v)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Step indices at which a solve stores its state.
#[derive(Debug, Clone, PartialEq)]
pub struct SaveGrid {
    steps: BTreeSet<usize>,
}

impl SaveGrid {
    /// Every step.
    pub fn all(grid: &TorusGrid) -> Self {
        Self { steps: (0..=grid.steps()).collect() }
    }

    /// Initial and final step only.
    pub fn endpoints(grid: &TorusGrid) -> Self {
        Self { steps: [0, grid.steps()].into_iter().collect() }
    }

    /// All dyadic points `k 2^-level T` plus the requested times, which must
    /// fall on step boundaries.
    pub fn dyadic(grid: &TorusGrid, level: u32, times: &[f64]) -> Result<Self> {
        if level > grid.step_level() {
            return Err(Error::config(
                "save.level",
                format!("dyadic level {level} is finer than the time step (level {})", grid.step_level()),
            ));
        }
        let stride = grid.steps() >> level;
        let mut steps: BTreeSet<usize> = (0..=grid.steps()).step_by(stride).collect();
        for &t in times {
            steps.insert(step_of(grid, t)?);
        }
        Ok(Self { steps })
    }

    /// Explicit step indices; each must lie in `0..=steps`.
    pub fn from_steps(grid: &TorusGrid, steps: impl IntoIterator<Item = usize>) -> Result<Self> {
        let steps: BTreeSet<usize> = steps.into_iter().collect();
        if steps.iter().any(|&m| m > grid.steps()) {
            return Err(Error::config("save", "step index beyond the horizon"));
        }
        Ok(Self { steps })
    }

    pub fn contains(&self, step: usize) -> bool {
        self.steps.contains(&step)
    }

    pub fn steps(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().copied()
    }
}

/// Step index of a time on the grid.
pub fn step_of(grid: &TorusGrid, t: f64) -> Result<usize> {
    let x = t / grid.dt();
    let m = x.round();
    if !(t.is_finite() && t >= 0.0) || (x - m).abs() > 1e-9 || m as usize > grid.steps() {
        return Err(Error::config("time", format!("{t} is not a step boundary of the grid")));
    }
    Ok(m as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub fingerprint: String,
    pub grid: TorusGrid,
    pub beta: f64,
    pub drive: DriveDescriptor,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TorusGrid,
    pub beta: f64,
    pub drive: DriveDescriptor,
    pub fingerprint: String,
    states: Vec<FieldState>,
}

impl Trajectory {
    pub fn new(grid: TorusGrid, beta: f64, drive: DriveDescriptor, states: Vec<FieldState>) -> Result<Self> {
        match states.first() {
            Some(s) if s.time == 0.0 => {}
            _ => return Err(Error::Validation("a trajectory starts with the state at t = 0".into())),
        }
        if states.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::Validation("save times must increase strictly".into()));
        }
        if states.iter().any(|s| s.u.len() != grid.len() || s.u_hat.len() != grid.len()) {
            return Err(Error::Validation("state does not match the grid".into()));
        }
        Ok(Self { grid, beta, drive, fingerprint: String::new(), states })
    }

    pub fn with_fingerprint(mut self, fingerprint: impl Into<String>) -> Self {
        self.fingerprint = fingerprint.into();
        self
    }

    pub fn states(&self) -> &[FieldState] {
        &self.states
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    pub fn final_state(&self) -> &FieldState {
        self.states.last().expect("trajectories are nonempty")
    }

    /// The stored state at time `t`, if it lies on the save grid.
    pub fn state_at(&self, t: f64) -> Option<&FieldState> {
        let tol = 1e-9 * self.grid.dt();
        self.states.iter().find(|s| (s.time - t).abs() <= tol)
    }

    pub fn header(&self) -> TrajectoryHeader {
        TrajectoryHeader {
            fingerprint: self.fingerprint.clone(),
            grid: self.grid,
            beta: self.beta,
            drive: self.drive.clone(),
            frames: self.states.len(),
        }
    }

    /// Writes the binary container: magic, header length, JSON header, then
    /// per frame the time followed by `u`, `v`, `u_hat`, `v_hat` as
    /// little-endian `f64` (complex values interleaved).
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::to_vec(&self.header())?;
        w.write_all(&MAGIC.to_le_bytes())?;
        w.write_all(&(header.len() as u64).to_le_bytes())?;
        w.write_all(&header)?;
        for s in &self.states {
            w.write_all(&s.time.to_le_bytes())?;
            for x in s.u.iter().chain(&s.v) {
                w.write_all(&x.to_le_bytes())?;
            }
            for c in s.u_hat.iter().chain(&s.v_hat) {
                w.write_all(&c.re.to_le_bytes())?;
                w.write_all(&c.im.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word).map_err(|_| Error::Format("truncated trajectory header".into()))?;
        if u64::from_le_bytes(word) != MAGIC {
            return Err(Error::Format("not a trajectory container".into()));
        }
        r.read_exact(&mut word).map_err(|_| Error::Format("truncated trajectory header".into()))?;
        let len = u64::from_le_bytes(word) as usize;
        if len > 1 << 24 {
            return Err(Error::Format(format!("implausible header length {len}")));
        }
        let mut header = vec![0u8; len];
        r.read_exact(&mut header).map_err(|_| Error::Format("truncated trajectory header".into()))?;
        let header: TrajectoryHeader = serde_json::from_slice(&header)?;
        let n = header.grid.len();
        let mut read_f64 = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut word).map_err(|_| Error::Format("truncated trajectory frame".into()))?;
            Ok(f64::from_le_bytes(word))
        };
        let mut states = Vec::with_capacity(header.frames);
        for _ in 0..header.frames {
            let time = read_f64(&mut r)?;
            let mut real = |r: &mut R| (0..n).map(|_| read_f64(r)).collect::<Result<Vec<f64>>>();
            let u = real(&mut r)?;
            let v = real(&mut r)?;
            let mut complex =
                |r: &mut R| (0..n).map(|_| Ok(Complex64::new(read_f64(r)?, read_f64(r)?))).collect::<Result<Vec<_>>>();
            let u_hat = complex(&mut r)?;
            let v_hat = complex(&mut r)?;
            states.push(FieldState { time, u, v, u_hat, v_hat });
        }
        if r.read(&mut word)? != 0 {
            return Err(Error::Format("trailing bytes after the last frame".into()));
        }
        Ok(Trajectory::new(header.grid, header.beta, header.drive, states)?.with_fingerprint(header.fingerprint))
    }

    /// Writes `<stem>.w3d` and the `<stem>.json` sidecar; returns both paths.
    pub fn export(&self, stem: &Path) -> Result<(PathBuf, PathBuf)> {
        let bin = stem.with_extension("w3d");
        let json = stem.with_extension("json");
        self.write_to(BufWriter::new(File::create(&bin)?))?;
        let sidecar = serde_json::json!({
            "container": bin.file_name().map(|s| s.to_string_lossy().into_owned()),
            "header": self.header(),
            "times": self.times(),
        });
        std::fs::write(&json, serde_json::to_vec_pretty(&sidecar)?)?;
        Ok((bin, json))
    }

    pub fn import(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}
