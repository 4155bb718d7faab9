//! Experiment configuration: one JSON document, every key defaulted.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use wave3d_core::analysis::{GridBox, HolderWindow, PairPolicy};
use wave3d_core::noise::{Basis, LocalizationParams, NoiseModel};
use wave3d_core::solver::{Coefficients, KickRule, Nonlinearity, SolverOptions};
use wave3d_core::{Error, Result, TorusGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Torus side `L`.
    pub side: f64,
    /// Points per axis `N`.
    pub points: usize,
    pub dt: f64,
    /// Horizon `T`.
    pub horizon: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { side: 2.56, points: 16, dt: 1.0 / 128.0, horizon: 1.0 }
    }
}

impl GridConfig {
    pub fn steps(&self) -> Result<usize> {
        let ratio = self.horizon / self.dt;
        let steps = ratio.round();
        if !(self.dt > 0.0 && self.horizon > 0.0) || (ratio - steps).abs() > 1e-9 * ratio.max(1.0) || steps < 1.0 {
            return Err(Error::config("grid.dt", "must divide the horizon into a whole number of steps"));
        }
        Ok(steps as usize)
    }

    pub fn build(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.side, self.points, self.horizon, self.steps()?)
            .map_err(|e| Error::config("grid", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub beta: f64,
    /// Localization constant `alpha`.
    pub alpha: f64,
    /// Master seed of the replica stream.
    pub seed: u64,
    /// Number of basis directions driving the equation; `null` for all.
    pub truncation: Option<usize>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { beta: 1.0, alpha: LocalizationParams::DEFAULT_ALPHA, seed: 20_240_601, truncation: Some(7) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Noise coefficient `sigma`; no smoothed-driver term.
    LinearNoise,
    /// Smoothed-driver coefficient `sigma`.
    WongZakai,
    /// Noise `sigma`, smoothed `-sigma`, control `sigma`.
    Girsanov,
    /// Control coefficient `sigma` only.
    Skeleton,
    /// The explicit `coefficients` object.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub preset: Preset,
    pub sigma: Nonlinearity,
    pub drift: Nonlinearity,
    pub coefficients: Option<Coefficients>,
    pub kick: KickRule,
    pub dealias: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            preset: Preset::WongZakai,
            sigma: Nonlinearity::tanh_preset(),
            drift: Nonlinearity::Zero,
            coefficients: None,
            kick: KickRule::Midpoint,
            dealias: false,
        }
    }
}

impl SolverConfig {
    pub fn coefficients(&self) -> Result<Coefficients> {
        let (s, b) = (self.sigma, self.drift);
        let c = match self.preset {
            Preset::LinearNoise => Coefficients::linear_noise(s, b),
            Preset::WongZakai => Coefficients::wong_zakai(s, b),
            Preset::Girsanov => Coefficients::girsanov(s, b),
            Preset::Skeleton => Coefficients::skeleton(s, b),
            Preset::Custom => self
                .coefficients
                .ok_or_else(|| Error::config("solver.coefficients", "the custom preset needs explicit coefficients"))?,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn options(&self) -> SolverOptions {
        SolverOptions { kick: self.kick, dealias: self.dealias }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseCheckConfig {
    pub covariance_samples: usize,
    pub lags: Vec<[i64; 3]>,
    /// Standard errors allowed between empirical and exact covariances.
    pub sigmas: f64,
    pub ewald_points: usize,
    pub ewald_fields: usize,
    /// Fields use modes with `|k|_inf <= ewald_band`.
    pub ewald_band: i64,
    pub ewald_tolerance: f64,
    pub localization_levels: Vec<u32>,
    pub localization_tableaux: usize,
    pub localization_target: f64,
}

impl Default for NoiseCheckConfig {
    fn default() -> Self {
        Self {
            covariance_samples: 4000,
            lags: vec![
                [0, 0, 0],
                [1, 0, 0],
                [0, 1, 0],
                [0, 0, 2],
                [1, 1, 0],
                [2, 1, 0],
                [3, 0, 1],
                [2, 2, 2],
                [4, 0, 0],
                [8, 8, 8],
            ],
            sigmas: 3.5,
            ewald_points: 8,
            ewald_fields: 20,
            ewald_band: 2,
            ewald_tolerance: 0.05,
            localization_levels: (3..=8).collect(),
            localization_tableaux: 10_000,
            localization_target: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenCheckConfig {
    pub mass_pairs: usize,
    pub mass_tolerance: f64,
    /// Polar and azimuthal node counts of the sphere rule.
    pub quadrature: [usize; 2],
    pub betas: Vec<f64>,
    /// Resolution and side of the power-law grid.
    pub points: usize,
    pub side: f64,
    pub slope_tolerance: f64,
    /// Times `t` of the ratio `G(2t)/G(t)` rows at `beta = 1`.
    pub ratio_times: Vec<f64>,
    pub ratio_tolerance: f64,
    pub radial_time: f64,
    pub radial_tolerance: f64,
}

impl Default for GreenCheckConfig {
    fn default() -> Self {
        Self {
            mass_pairs: 20,
            mass_tolerance: 1e-10,
            quadrature: [16, 32],
            betas: vec![0.5, 1.0, 1.5],
            points: 64,
            side: 4.0,
            slope_tolerance: 0.05,
            ratio_times: vec![0.1, 0.2, 0.3, 0.4],
            ratio_tolerance: 0.05,
            radial_time: 0.2,
            radial_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Times at which the variance is compared with the isometry.
    pub times: Vec<f64>,
    pub sigmas: f64,
    /// Export the first replica's trajectory.
    pub export: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { times: vec![0.25, 0.5, 1.0], sigmas: 3.0, export: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LagConfig {
    pub replicas: usize,
    pub times: Vec<f64>,
    pub p: f64,
    /// Basis directions of the lag ensemble; `null` for all.
    pub truncation: Option<usize>,
    pub tolerance: f64,
}

impl Default for LagConfig {
    fn default() -> Self {
        Self { replicas: 200, times: vec![0.5, 0.75, 1.0], p: 2.0, truncation: None, tolerance: 0.35 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WzConfig {
    pub p: f64,
    /// Tail threshold; `null` for the median at the coarsest level.
    pub lambda: Option<f64>,
    pub ratio_target: f64,
    pub probability_target: f64,
    pub lag: LagConfig,
}

impl Default for WzConfig {
    fn default() -> Self {
        Self { p: 2.0, lambda: None, ratio_target: 0.25, probability_target: 0.1, lag: LagConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularityConfig {
    pub betas: Vec<f64>,
    pub p: f64,
    /// Spatial separations in grid units.
    pub separations: Vec<usize>,
    /// Admissible exponent band at `beta = 1`.
    pub band: [f64; 2],
    /// Required exponent gap between the smallest and largest `beta`.
    pub min_gap: f64,
    pub translation_point: [usize; 3],
    pub translation_shifts: Vec<[i64; 3]>,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        Self {
            betas: vec![0.5, 1.0, 1.5],
            p: 2.0,
            separations: (1..=8).collect(),
            band: [0.40, 0.60],
            min_gap: 0.3,
            translation_point: [7, 7, 7],
            translation_shifts: vec![[1, 0, 0], [0, 1, 1], [1, 1, 1]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupportConfig {
    /// Noise coefficients, one diagnostic run each.
    pub sigmas: Vec<Nonlinearity>,
    /// `h = amplitude e_direction`, constant in time.
    pub control_direction: usize,
    pub control_amplitude: f64,
    pub oracle_amplitude: f64,
    pub oracle_tolerance: f64,
}

impl Default for SupportConfig {
    fn default() -> Self {
        Self {
            sigmas: vec![Nonlinearity::Constant { value: 1.0 }, Nonlinearity::tanh_preset()],
            control_direction: 0,
            control_amplitude: 0.0,
            oracle_amplitude: 0.8,
            oracle_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub points: usize,
    pub steps: usize,
    pub seeds: usize,
    pub iterations: usize,
    pub sigma: Nonlinearity,
    pub drift: Nonlinearity,
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            points: 8,
            steps: 16,
            seeds: 5,
            iterations: 40,
            sigma: Nonlinearity::tanh_preset(),
            drift: Nonlinearity::tanh(1.0),
            tolerance: 5e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub noise: NoiseConfig,
    pub solver: SolverConfig,
    pub levels: Vec<u32>,
    pub window: HolderWindow,
    pub replicas: usize,
    pub out: PathBuf,
    pub noise_check: NoiseCheckConfig,
    pub green_check: GreenCheckConfig,
    pub simulate: SimulateConfig,
    pub wz: WzConfig,
    pub regularity: RegularityConfig,
    pub support: SupportConfig,
    pub oracle: OracleConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            noise: NoiseConfig::default(),
            solver: SolverConfig::default(),
            levels: (3..=7).collect(),
            window: HolderWindow {
                rho: 0.4,
                t0: 0.5,
                region: GridBox { origin: [6, 6, 6], shape: [3, 3, 3] },
                policy: PairPolicy::default(),
                time_stride: 4,
            },
            replicas: 200,
            out: PathBuf::from("out"),
            noise_check: NoiseCheckConfig::default(),
            green_check: GreenCheckConfig::default(),
            simulate: SimulateConfig::default(),
            wz: WzConfig::default(),
            regularity: RegularityConfig::default(),
            support: SupportConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

fn check(ok: bool, key: &str, reason: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, reason))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.build()?;
        let beta = self.noise.beta;
        check(beta > 0.0 && beta < 2.0, "noise.beta", format!("must lie in (0, 2), got {beta}"))?;
        LocalizationParams::new(self.noise.alpha).map_err(|e| Error::config("noise.alpha", e.to_string()))?;
        check(self.replicas >= 1, "replicas", "must be at least 1")?;
        check(
            !self.levels.is_empty() && self.levels.windows(2).all(|w| w[0] < w[1]) && self.levels[0] >= 1,
            "levels",
            "must be a nonempty strictly increasing list of positive levels",
        )?;
        let top = *self.levels.last().expect("nonempty");
        check(
            top <= grid.step_level(),
            "grid.dt",
            format!("dt must divide 2^-{top} T; the grid resolves only level {}", grid.step_level()),
        )?;
        if let Some(j) = self.noise.truncation {
            check(j >= 1 && j < grid.len(), "noise.truncation", format!("must lie in 1..{}", grid.len()))?;
        }
        self.window.validate(&grid)?;
        let diam = self.window.region.diameter(&grid);
        check(
            grid.side() >= diam + 2.0 * grid.horizon() - 1e-12,
            "grid.side",
            format!("L = {} is below diam(K) + 2T = {}", grid.side(), diam + 2.0 * grid.horizon()),
        )?;
        self.solver.coefficients()?;
        check(self.support.sigmas.iter().all(|s| s.validate("support.sigmas").is_ok()), "support.sigmas", "invalid")?;
        check(self.regularity.betas.iter().all(|b| *b > 0.0 && *b < 2.0), "regularity.betas", "must lie in (0, 2)")?;
        check(self.regularity.separations.iter().all(|&s| s > 0), "regularity.separations", "must be positive")?;
        check(self.green_check.betas.iter().all(|b| *b > 0.0 && *b < 2.0), "green_check.betas", "must lie in (0, 2)")?;
        check(
            self.wz.p > 0.0 && self.regularity.p > 0.0 && self.wz.lag.p > 0.0,
            "p",
            "moment orders must be positive",
        )?;
        Ok(())
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        self.grid.build()
    }

    pub fn model(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.grid()?, self.noise.beta)
    }

    /// Basis for `truncation` directions (`None`: all).
    pub fn basis(&self, model: &NoiseModel, truncation: Option<usize>) -> Result<Basis> {
        match truncation {
            Some(j) => Basis::truncated(model, j),
            None => Ok(Basis::full(model)),
        }
    }

    pub fn localization(&self) -> Result<LocalizationParams> {
        LocalizationParams::new(self.noise.alpha)
    }

    /// Hex SHA-256 of the canonical (key-sorted) JSON of every semantic key;
    /// the output directory is excluded.
    pub fn fingerprint(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("out");
        }
        let canonical = serde_json::to_string(&value).expect("value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
