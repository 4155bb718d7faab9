//! Spectral simulation and analysis of the 3D stochastic wave equation driven
//! by Gaussian noise that is white in time and Riesz-correlated in space.
//!
//! The crate is organised bottom-up:
//!
//! * [`noise`]: spectral measure, `H` basis, Brownian tableaux, the smoothed
//!   driver `w^n` and localization events.
//! * [`green`]: the wave kernel as a sphere measure and as a Fourier multiplier.
//! * [`solver`]: trigonometric time stepping of the mild equations, lagged
//!   snapshots, the Girsanov shift and a Picard reference solver.
//! * [`analysis`]: Hölder norms, moments, scaling fits and convergence reports.

// `!(x > 0.0)` deliberately rejects NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod fft;
pub mod green;
pub mod grid;
pub mod noise;
pub mod solver;

pub use error::{Error, Result};
pub use grid::TorusGrid;
