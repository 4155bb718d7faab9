//! Dyadic Brownian increments `W_j(Delta_i)` sampled by Brownian-bridge
//! refinement.
//!
//! Each basis direction `j` owns its own ChaCha stream. Level 0 draws `W_j(T)`
//! and every further level splits each cell in two with one bridge draw, so
//! the level-`n` tableau consumes a prefix of the stream and the level-`n+1`
//! tableau of the same seed refines it. Values are kept on a binary lattice
//! whose quantum is the power of two nearest below `sqrt(T) 2^-46`, so every
//! value is exactly representable and pairwise sums of the finer level
//! reproduce the coarser level exactly.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

const MAGIC: u64 = u64::from_le_bytes(*b"W3DTABL1");
const LATTICE_BITS: i32 = 46;

#[derive(Debug, Clone, PartialEq)]
pub struct BrownianTableau {
    level: u32,
    truncation: usize,
    horizon: f64,
    seed: Option<u64>,
    /// Row-major `truncation x 2^level`.
    increments: Vec<f64>,
}

fn quantize(x: f64, quantum: f64) -> f64 {
    (x / quantum).round() * quantum
}

impl BrownianTableau {
    pub fn sample(level: u32, truncation: usize, horizon: f64, seed: u64) -> Result<Self> {
        if level == 0 || level > 30 {
            return Err(Error::parameter("level", format!("must lie in 1..=30, got {level}")));
        }
        if truncation == 0 {
            return Err(Error::parameter("truncation", "must be at least 1"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::parameter("horizon", format!("must be positive, got {horizon}")));
        }
        let cells = 1usize << level;
        let quantum = 2f64.powi(horizon.sqrt().log2().floor() as i32 - LATTICE_BITS);
        let mut increments = Vec::with_capacity(truncation * cells);
        let mut row = Vec::with_capacity(cells);
        let mut next = Vec::with_capacity(cells);
        for j in 0..truncation {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            let z: f64 = StandardNormal.sample(&mut rng);
            row.clear();
            row.push(quantize(horizon.sqrt() * z, quantum));
            for l in 1..=level {
                // bridge midpoint spread: half the parent standard deviation
                let spread = 0.5 * (horizon / (1u64 << (l - 1)) as f64).sqrt();
                next.clear();
                for &parent in &row {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let left = quantize(0.5 * parent + spread * z, quantum);
                    next.push(left);
                    next.push(parent - left);
                }
                std::mem::swap(&mut row, &mut next);
            }
            increments.extend_from_slice(&row);
        }
        Ok(Self { level, truncation, horizon, seed: Some(seed), increments })
    }

    /// Builds a tableau from explicit increments (row-major, `truncation x 2^level`).
    pub fn from_increments(level: u32, truncation: usize, horizon: f64, increments: Vec<f64>) -> Result<Self> {
        if level == 0 || level > 30 || truncation == 0 || !(horizon > 0.0) {
            return Err(Error::parameter("tableau", "level, truncation and horizon must be positive"));
        }
        if increments.len() != truncation << level {
            return Err(Error::Validation(format!(
                "expected {} increments, got {}",
                truncation << level,
                increments.len()
            )));
        }
        if increments.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("increments must be finite".into()));
        }
        Ok(Self { level, truncation, horizon, seed: None, increments })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn cells(&self) -> usize {
        1 << self.level
    }

    /// Width `2^-n T` of a dyadic cell.
    pub fn cell_width(&self) -> f64 {
        self.horizon / self.cells() as f64
    }

    /// Variance `T 2^-n` of a single increment.
    pub fn cell_variance(&self) -> f64 {
        self.cell_width()
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `W_j(Delta_i)` with zero-based direction `j`.
    #[inline]
    pub fn increment(&self, j: usize, i: usize) -> f64 {
        self.increments[j * self.cells() + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let c = self.cells();
        &self.increments[j * c..(j + 1) * c]
    }

    /// Increments of every direction over cell `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.truncation).map(|j| self.increment(j, i)).collect()
    }

    /// Pairwise sums down to a coarser level.
    pub fn coarsen(&self, level: u32) -> Result<Self> {
        if level == 0 || level > self.level {
            return Err(Error::parameter("level", format!("coarse level must lie in 1..={}, got {level}", self.level)));
        }
        let mut cur = self.clone();
        while cur.level > level {
            let cells = cur.cells() / 2;
            let mut inc = Vec::with_capacity(cur.truncation * cells);
            for j in 0..cur.truncation {
                let row = cur.row(j);
                inc.extend(row.chunks_exact(2).map(|p| p[0] + p[1]));
            }
            cur = Self { level: cur.level - 1, increments: inc, ..cur };
        }
        Ok(cur)
    }

    /// Flat little-endian dump: magic, `n`, `J`, `T`, then the increments.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&MAGIC.to_le_bytes())?;
        w.write_all(&u64::from(self.level).to_le_bytes())?;
        w.write_all(&(self.truncation as u64).to_le_bytes())?;
        w.write_all(&self.horizon.to_le_bytes())?;
        for x in &self.increments {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        if u64::from_le_bytes(next(&mut r)?) != MAGIC {
            return Err(Error::Format("bad tableau magic".into()));
        }
        let level = u64::from_le_bytes(next(&mut r)?);
        let truncation = u64::from_le_bytes(next(&mut r)?);
        let horizon = f64::from_le_bytes(next(&mut r)?);
        if level == 0 || level > 30 || truncation == 0 || truncation > (1 << 32) {
            return Err(Error::Format(format!("implausible header: n = {level}, J = {truncation}")));
        }
        let count = (truncation as usize) << level;
        let mut increments = Vec::with_capacity(count);
        for _ in 0..count {
            increments.push(f64::from_le_bytes(next(&mut r)?));
        }
        Self::from_increments(level as u32, truncation as usize, horizon, increments)
    }
}
