use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::model::RateFunction;

fn two() -> f64 {
    2.0
}

fn one() -> f64 {
    1.0
}

/// Turning and aging functions together with the domain scales.
///
/// The analysis modules work in the nondimensional scaling where the
/// domain is `[0, 1]`, particles move at unit speed and the homogeneous
/// density of each family is 1 (total mass 2). [`ModelParams::new`] produces
/// exactly that; [`ModelParams::from_dimensional`] maps raw parameters onto it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: RateFunction,
    pub gamma: RateFunction,
    #[serde(default = "two")]
    pub total_mass: f64,
    #[serde(default = "one")]
    pub domain_length: f64,
    #[serde(default = "one")]
    pub speed: f64,
}

/// Physical scales used to nondimensionalize raw rate functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionalScales {
    /// particle speed `s`
    pub speed: f64,
    /// domain length `L`
    pub length: f64,
    /// average density per family `m₀`
    pub mean_density: f64,
}

/// On-disk model description. When `dimensional` is present the rate
/// functions are interpreted in physical units and rescaled on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub lambda: RateFunction,
    pub gamma: RateFunction,
    #[serde(default)]
    pub dimensional: Option<DimensionalScales>,
}

impl ModelParams {
    pub fn new(lambda: RateFunction, gamma: RateFunction) -> Self {
        Self {
            lambda,
            gamma,
            total_mass: 2.0,
            domain_length: 1.0,
            speed: 1.0,
        }
    }

    /// Rescale raw `l(ρ)`, `g(ρ)` to `λ(w) = (L/s) l(m₀ w)`, `γ(w) = (L/s) g(m₀ w)`.
    pub fn from_dimensional(
        turning: &RateFunction,
        aging: &RateFunction,
        scales: DimensionalScales,
    ) -> Result<Self> {
        let DimensionalScales {
            speed,
            length,
            mean_density,
        } = scales;
        if !(speed > 0.0 && length > 0.0 && mean_density > 0.0) {
            return param("speed, length and mean_density must all be positive");
        }
        let time_scale = length / speed;
        Ok(Self::new(
            turning.rescaled(time_scale, mean_density)?,
            aging.rescaled(time_scale, mean_density)?,
        ))
    }

    pub fn from_config(cfg: ModelConfig) -> Result<Self> {
        match cfg.dimensional {
            Some(scales) => Self::from_dimensional(&cfg.lambda, &cfg.gamma, scales),
            None => Ok(Self::new(cfg.lambda, cfg.gamma)),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ModelConfig =
            serde_json::from_str(s).map_err(|e| Error::Config(format!("model: {e}")))?;
        Self::from_config(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("total_mass", self.total_mass),
            ("domain_length", self.domain_length),
            ("speed", self.speed),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return param(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Copy with γ replaced by `γ / eps` (fast-aging scaling).
    pub fn with_fast_aging(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return param(format!("aging scale must be positive, got {eps}"));
        }
        Ok(Self {
            gamma: self.gamma.rescaled(1.0 / eps, 1.0)?,
            ..self.clone()
        })
    }

    /// Homogeneous density of each family, `total_mass / (2 L)`.
    pub fn mean_density(&self) -> f64 {
        0.5 * self.total_mass / self.domain_length
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RateSpec;
    use approx::assert_relative_eq;

    #[test]
    fn parses_minimal_config_with_defaults() {
        let m = ModelParams::from_json_str(
            r#"{"lambda": {"kind": "sigmoid_exp", "lam_lo": 2.5, "lam_hi": 8.0, "alpha": 10.0},
                "gamma": {"kind": "constant", "value": 1.5}}"#,
        )
        .unwrap();
        assert_eq!(m.total_mass, 2.0);
        assert_eq!(m.domain_length, 1.0);
        assert_eq!(m.speed, 1.0);
        assert_eq!(m.mean_density(), 1.0);
    }

    #[test]
    fn dimensional_scaling() {
        let l = RateFunction::new(RateSpec::SigmoidExp {
            lam_lo: 0.1,
            lam_hi: 0.4,
            alpha: 2.0,
            center: 5.0,
        })
        .unwrap();
        let g = RateFunction::constant(0.05).unwrap();
        let scales = DimensionalScales {
            speed: 4.0,
            length: 100.0,
            mean_density: 5.0,
        };
        let m = ModelParams::from_dimensional(&l, &g, scales).unwrap();
        // the inflection moves to the dimensionless density 1
        assert_relative_eq!(m.lambda.value(1.0), 25.0 * 0.25, epsilon = 1e-12);
        assert_relative_eq!(m.gamma.value(0.3), 25.0 * 0.05, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_json() {
        let err = ModelParams::from_json_str(r#"{"lambda": {"kind": "nope"}}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
