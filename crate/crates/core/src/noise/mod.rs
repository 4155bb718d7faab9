//! The correlated noise: Riesz kernel, spectral measure, orthonormal basis,
//! Brownian tableau, regularised driver `w^n` and localization events.

mod basis;
mod kernel;
mod regularized;
mod tableau;

pub use basis::{h_inner, Basis, BasisElement, Part};
pub(crate) use kernel::check_beta;
pub use kernel::{hnorm_sq, riesz_covariance, spectral_weight, NoiseModel};
pub use regularized::{localization_indicator, regularized_derivative, wn_hnorm, LocalizationParams, RegularizedNoise};
pub use tableau::BrownianTableau;
