//! Registry of globally Lipschitz nonlinearities and the coefficient set
//! `(A, B, D, b)` of the driven wave equations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum Nonlinearity {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    Identity,
    /// `slope u + intercept`.
    Affine {
        slope: f64,
        intercept: f64,
    },
    /// `offset + amplitude sin(scale u)`.
    Sine {
        scale: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `offset + amplitude tanh(scale u)`.
    Tanh {
        scale: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        offset: f64,
    },
}

impl Nonlinearity {
    pub fn sine(scale: f64) -> Self {
        Nonlinearity::Sine { scale, amplitude: 1.0, offset: 0.0 }
    }

    pub fn tanh(scale: f64) -> Self {
        Nonlinearity::Tanh { scale, amplitude: 1.0, offset: 0.0 }
    }

    /// `1 + tanh(u)`: bounded, Lipschitz and nonzero at the origin.
    pub fn tanh_preset() -> Self {
        Nonlinearity::Tanh { scale: 1.0, amplitude: 1.0, offset: 1.0 }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Constant { value } => value,
            Nonlinearity::Identity => u,
            Nonlinearity::Affine { slope, intercept } => slope * u + intercept,
            Nonlinearity::Sine { scale, amplitude, offset } => offset + amplitude * (scale * u).sin(),
            Nonlinearity::Tanh { scale, amplitude, offset } => offset + amplitude * (scale * u).tanh(),
        }
    }

    /// Global Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Nonlinearity::Zero | Nonlinearity::Constant { .. } => 0.0,
            Nonlinearity::Identity => 1.0,
            Nonlinearity::Affine { slope, .. } => slope.abs(),
            Nonlinearity::Sine { scale, amplitude, .. } | Nonlinearity::Tanh { scale, amplitude, .. } => {
                (scale * amplitude).abs()
            }
        }
    }

    /// `-f`.
    pub fn negated(&self) -> Self {
        match *self {
            Nonlinearity::Zero => Nonlinearity::Zero,
            Nonlinearity::Constant { value } => Nonlinearity::Constant { value: -value },
            Nonlinearity::Identity => Nonlinearity::Affine { slope: -1.0, intercept: 0.0 },
            Nonlinearity::Affine { slope, intercept } => Nonlinearity::Affine { slope: -slope, intercept: -intercept },
            Nonlinearity::Sine { scale, amplitude, offset } => {
                Nonlinearity::Sine { scale, amplitude: -amplitude, offset: -offset }
            }
            Nonlinearity::Tanh { scale, amplitude, offset } => {
                Nonlinearity::Tanh { scale, amplitude: -amplitude, offset: -offset }
            }
        }
    }

    /// True when the function vanishes identically.
    pub fn is_zero(&self) -> bool {
        match *self {
            Nonlinearity::Zero => true,
            Nonlinearity::Constant { value } => value == 0.0,
            Nonlinearity::Identity => false,
            Nonlinearity::Affine { slope, intercept } => slope == 0.0 && intercept == 0.0,
            Nonlinearity::Sine { amplitude, offset, .. } | Nonlinearity::Tanh { amplitude, offset, .. } => {
                amplitude == 0.0 && offset == 0.0
            }
        }
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        let finite = match *self {
            Nonlinearity::Zero | Nonlinearity::Identity => true,
            Nonlinearity::Constant { value } => value.is_finite(),
            Nonlinearity::Affine { slope, intercept } => slope.is_finite() && intercept.is_finite(),
            Nonlinearity::Sine { scale, amplitude, offset } | Nonlinearity::Tanh { scale, amplitude, offset } => {
                scale.is_finite() && amplitude.is_finite() && offset.is_finite()
            }
        };
        if finite {
            Ok(())
        } else {
            Err(Error::config(key, "nonlinearity parameters must be finite"))
        }
    }
}

/// Coefficients of `u_tt - Laplace u = A(u) M' + B(u) w' + D(u) h + b(u)`.
///
/// `noise` is `A` (multiplies the Gaussian noise), `smoothed` is `B` (the
/// Wong-Zakai driver, or a second noise coefficient when no smoothing level
/// is set), `control` is `D` and `drift` is `b`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Coefficients {
    pub noise: Nonlinearity,
    pub smoothed: Nonlinearity,
    pub control: Nonlinearity,
    pub drift: Nonlinearity,
}

impl Coefficients {
    /// `sigma` on the noise alone: the original equation.
    pub fn linear_noise(sigma: Nonlinearity, drift: Nonlinearity) -> Self {
        Self { noise: sigma, drift, ..Self::default() }
    }

    /// `(A, B, D) = (0, sigma, 0)`: compares `u` with the smoothed-driver solution.
    pub fn wong_zakai(sigma: Nonlinearity, drift: Nonlinearity) -> Self {
        Self { smoothed: sigma, drift, ..Self::default() }
    }

    /// `(A, B, D) = (sigma, -sigma, sigma)`: the shifted equation of the
    /// Girsanov transform.
    pub fn girsanov(sigma: Nonlinearity, drift: Nonlinearity) -> Self {
        Self { noise: sigma, smoothed: sigma.negated(), control: sigma, drift }
    }

    /// `sigma` in the control slot only: the deterministic skeleton.
    pub fn skeleton(sigma: Nonlinearity, drift: Nonlinearity) -> Self {
        Self { control: sigma, drift, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.validate("coefficients.noise")?;
        self.smoothed.validate("coefficients.smoothed")?;
        self.control.validate("coefficients.control")?;
        self.drift.validate("coefficients.drift")
    }

    pub fn is_zero(&self) -> bool {
        self.noise.is_zero() && self.smoothed.is_zero() && self.control.is_zero() && self.drift.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> Vec<Nonlinearity> {
        vec![
            Nonlinearity::Zero,
            Nonlinearity::Constant { value: 2.5 },
            Nonlinearity::Identity,
            Nonlinearity::Affine { slope: -1.7, intercept: 0.3 },
            Nonlinearity::sine(2.0),
            Nonlinearity::tanh(0.7),
            Nonlinearity::Tanh { scale: 3.0, amplitude: -0.5, offset: 1.0 },
        ]
    }

    #[test]
    fn declared_lipschitz_constants_hold() {
        let xs: Vec<f64> = (-400..=400).map(|i| f64::from(i) * 0.0125).collect();
        for f in registry() {
            let l = f.lipschitz();
            let mut worst: f64 = 0.0;
            for w in xs.windows(2) {
                let q = (f.eval(w[1]) - f.eval(w[0])).abs() / (w[1] - w[0]);
                worst = worst.max(q);
                assert!(q <= l * (1.0 + 1e-9) + 1e-12, "{f:?}: {q} > {l}");
            }
            // the bound is attained or nearly so
            assert!(worst >= 0.95 * l, "{f:?}: loose constant {l}, observed {worst}");
        }
    }

    #[test]
    fn negation_flips_values() {
        for f in registry() {
            let g = f.negated();
            for &u in &[-1.3, 0.0, 0.4, 2.2] {
                assert_eq!(g.eval(u), -f.eval(u));
            }
            assert_eq!(g.lipschitz(), f.lipschitz());
        }
    }

    #[test]
    fn presets_place_sigma() {
        let s = Nonlinearity::tanh(1.0);
        let g = Coefficients::girsanov(s, Nonlinearity::Zero);
        assert_eq!(g.noise, s);
        assert_eq!(g.control, s);
        assert_eq!(g.smoothed.eval(0.8), -s.eval(0.8));
        let w = Coefficients::wong_zakai(s, Nonlinearity::Zero);
        assert!(w.noise.is_zero() && w.control.is_zero());
        assert!(Coefficients::default().is_zero());
    }

    #[test]
    fn serde_round_trip() {
        let c =
            Coefficients::girsanov(Nonlinearity::Tanh { scale: 1.0, amplitude: 1.0, offset: 1.0 }, Nonlinearity::Zero);
        let s = serde_json::to_string(&c).unwrap();
        let back: Coefficients = serde_json::from_str(&s).unwrap();
        assert_eq!(c, back);
        let parsed: Nonlinearity = serde_json::from_str(r#"{"kind":"sine","scale":2.0}"#).unwrap();
        assert_eq!(parsed, Nonlinearity::sine(2.0));
    }
}
