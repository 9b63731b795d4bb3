//! Density-dependent rate functions.
//!
//! Both the turning rate λ and the aging rate γ are drawn from the same
//! closed family of shapes. Every kind has a closed-form value, derivative
//! and antiderivative, so downstream code never needs numerical
//! differentiation or quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// One linear ramp of a [`RateSpec::TripleStep`]: rises by `rise` over
/// `[center - eps, center + eps]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ramp {
    pub rise: f64,
    pub center: f64,
    pub eps: f64,
}

fn default_center() -> f64 {
    1.0
}

/// Plain-data description of a rate function, as read from JSON.
///
/// ```json
/// {"kind": "sigmoid_exp", "lam_lo": 2.5, "lam_hi": 8.0, "alpha": 10.0}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateSpec {
    Constant {
        value: f64,
    },
    /// `a + b ρ`
    Linear {
        a: f64,
        b: f64,
    },
    /// `a + b ρ²`
    Quadratic {
        a: f64,
        b: f64,
    },
    /// Logistic step from `lam_lo` to `lam_hi`, steepest at `center`.
    SigmoidExp {
        lam_lo: f64,
        lam_hi: f64,
        alpha: f64,
        #[serde(default = "default_center")]
        center: f64,
    },
    /// `lam_lo + (lam_hi - lam_lo) α ρ² / (1 + α ρ²)`
    SigmoidRational {
        lam_lo: f64,
        lam_hi: f64,
        alpha: f64,
    },
    /// Linear ramp from `lam_lo` to `lam_hi` on `[center - eps, center + eps]`.
    PiecewiseLinearStep {
        lam_lo: f64,
        lam_hi: f64,
        eps: f64,
        #[serde(default = "default_center")]
        center: f64,
    },
    /// Two C¹ quadratic steps: `lam_lo → lam_mid` around `rho_lo` and
    /// `lam_mid → lam_hi` around `rho_hi`, each of half-width `delta`.
    DoubleSigmoid {
        lam_lo: f64,
        lam_mid: f64,
        lam_hi: f64,
        rho_lo: f64,
        rho_hi: f64,
        delta: f64,
    },
    /// `lam_lo` plus three linear ramps.
    TripleStep {
        lam_lo: f64,
        ramps: [Ramp; 3],
    },
}

/// A validated, immutable rate function `ρ ↦ f(ρ)`.
///
/// Construction checks every parameter constraint; evaluation never fails.
/// Values are guaranteed to stay above [`RateFunction::lower_bound`] > 0 on
/// `ρ ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RateSpec", into = "RateSpec")]
pub struct RateFunction {
    spec: RateSpec,
}

impl From<RateFunction> for RateSpec {
    fn from(f: RateFunction) -> Self {
        f.spec
    }
}

impl TryFrom<RateSpec> for RateFunction {
    type Error = Error;

    fn try_from(spec: RateSpec) -> Result<Self> {
        validate(&spec)?;
        Ok(Self { spec })
    }
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        param(format!("{name} must be finite, got {x}"))
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    finite(name, x)?;
    if x > 0.0 {
        Ok(())
    } else {
        param(format!("{name} must be positive, got {x}"))
    }
}

fn non_negative(name: &str, x: f64) -> Result<()> {
    finite(name, x)?;
    if x >= 0.0 {
        Ok(())
    } else {
        param(format!("{name} must be non-negative, got {x}"))
    }
}

fn ordered(lo_name: &str, lo: f64, hi_name: &str, hi: f64) -> Result<()> {
    if lo <= hi {
        Ok(())
    } else {
        param(format!("{lo_name} ({lo}) must not exceed {hi_name} ({hi})"))
    }
}

fn validate(spec: &RateSpec) -> Result<()> {
    match *spec {
        RateSpec::Constant { value } => positive("value", value),
        RateSpec::Linear { a, b } | RateSpec::Quadratic { a, b } => {
            positive("a", a)?;
            non_negative("b", b)
        }
        RateSpec::SigmoidExp {
            lam_lo,
            lam_hi,
            alpha,
            center,
        } => {
            positive("lam_lo", lam_lo)?;
            positive("lam_hi", lam_hi)?;
            ordered("lam_lo", lam_lo, "lam_hi", lam_hi)?;
            positive("alpha", alpha)?;
            finite("center", center)
        }
        RateSpec::SigmoidRational {
            lam_lo,
            lam_hi,
            alpha,
        } => {
            positive("lam_lo", lam_lo)?;
            positive("lam_hi", lam_hi)?;
            ordered("lam_lo", lam_lo, "lam_hi", lam_hi)?;
            positive("alpha", alpha)
        }
        RateSpec::PiecewiseLinearStep {
            lam_lo,
            lam_hi,
            eps,
            center,
        } => {
            positive("lam_lo", lam_lo)?;
            positive("lam_hi", lam_hi)?;
            ordered("lam_lo", lam_lo, "lam_hi", lam_hi)?;
            positive("eps", eps)?;
            finite("center", center)
        }
        RateSpec::DoubleSigmoid {
            lam_lo,
            lam_mid,
            lam_hi,
            rho_lo,
            rho_hi,
            delta,
        } => {
            positive("lam_lo", lam_lo)?;
            ordered("lam_lo", lam_lo, "lam_mid", lam_mid)?;
            ordered("lam_mid", lam_mid, "lam_hi", lam_hi)?;
            finite("lam_hi", lam_hi)?;
            positive("rho_lo", rho_lo)?;
            positive("rho_hi", rho_hi)?;
            if rho_lo >= rho_hi {
                return param(format!("rho_lo ({rho_lo}) must be below rho_hi ({rho_hi})"));
            }
            positive("delta", delta)?;
            let limit = rho_lo.min(0.5 * (rho_hi - rho_lo));
            if delta >= limit {
                return param(format!(
                    "delta ({delta}) must be below min(rho_lo, (rho_hi - rho_lo)/2) = {limit}"
                ));
            }
            Ok(())
        }
        RateSpec::TripleStep { lam_lo, ramps } => {
            positive("lam_lo", lam_lo)?;
            for r in ramps.iter() {
                non_negative("ramp rise", r.rise)?;
                positive("ramp eps", r.eps)?;
                finite("ramp center", r.center)?;
            }
            Ok(())
        }
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Unit linear ramp 0 → 1 on `[c - eps, c + eps)`; returns value, right
/// derivative and antiderivative anchored so that it vanishes left of the ramp.
fn unit_ramp(x: f64, c: f64, eps: f64) -> (f64, f64, f64) {
    let a = c - eps;
    let b = c + eps;
    if x < a {
        (0.0, 0.0, 0.0)
    } else if x < b {
        let t = x - a;
        (t / (2.0 * eps), 1.0 / (2.0 * eps), t * t / (4.0 * eps))
    } else {
        (1.0, 0.0, eps + (x - b))
    }
}

/// Quadratic C¹ step 0 → 1 on `[c - d, c + d)`; same return convention as
/// [`unit_ramp`].
fn unit_smooth_step(x: f64, c: f64, d: f64) -> (f64, f64, f64) {
    let d2 = d * d;
    if x < c - d {
        (0.0, 0.0, 0.0)
    } else if x < c {
        let t = x - c + d;
        (t * t / (2.0 * d2), t / d2, t * t * t / (6.0 * d2))
    } else if x < c + d {
        let t = x - c - d;
        (
            1.0 - t * t / (2.0 * d2),
            -t / d2,
            d / 6.0 + (x - c) - (t * t * t + d * d2) / (6.0 * d2),
        )
    } else {
        (1.0, 0.0, d + (x - c - d))
    }
}

impl RateFunction {
    pub fn new(spec: RateSpec) -> Result<Self> {
        Self::try_from(spec)
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(RateSpec::Constant { value })
    }

    pub fn spec(&self) -> &RateSpec {
        &self.spec
    }

    /// Value and exact derivative at `rho`. At kinks the derivative is the
    /// right derivative.
    pub fn eval(&self, rho: f64) -> (f64, f64) {
        match self.spec {
            RateSpec::Constant { value } => (value, 0.0),
            RateSpec::Linear { a, b } => (a + b * rho, b),
            RateSpec::Quadratic { a, b } => (a + b * rho * rho, 2.0 * b * rho),
            RateSpec::SigmoidExp {
                lam_lo,
                lam_hi,
                alpha,
                center,
            } => {
                let s = logistic(alpha * (rho - center));
                let h = lam_hi - lam_lo;
                (lam_lo + h * s, h * alpha * s * (1.0 - s))
            }
            RateSpec::SigmoidRational {
                lam_lo,
                lam_hi,
                alpha,
            } => {
                let q = 1.0 + alpha * rho * rho;
                let h = lam_hi - lam_lo;
                (lam_hi - h / q, h * 2.0 * alpha * rho / (q * q))
            }
            RateSpec::PiecewiseLinearStep {
                lam_lo,
                lam_hi,
                eps,
                center,
            } => {
                let (r, dr, _) = unit_ramp(rho, center, eps);
                let h = lam_hi - lam_lo;
                (lam_lo + h * r, h * dr)
            }
            RateSpec::DoubleSigmoid {
                lam_lo,
                lam_mid,
                lam_hi,
                rho_lo,
                rho_hi,
                delta,
            } => {
                let (s1, d1, _) = unit_smooth_step(rho, rho_lo, delta);
                let (s2, d2, _) = unit_smooth_step(rho, rho_hi, delta);
                let h1 = lam_mid - lam_lo;
                let h2 = lam_hi - lam_mid;
                (lam_lo + h1 * s1 + h2 * s2, h1 * d1 + h2 * d2)
            }
            RateSpec::TripleStep { lam_lo, ramps } => {
                ramps.iter().fold((lam_lo, 0.0), |(v, d), r| {
                    let (s, ds, _) = unit_ramp(rho, r.center, r.eps);
                    (v + r.rise * s, d + r.rise * ds)
                })
            }
        }
    }

    pub fn value(&self, rho: f64) -> f64 {
        self.eval(rho).0
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        self.eval(rho).1
    }

    /// Closed-form `∫₀^ρ f(u) du`.
    pub fn integral(&self, rho: f64) -> f64 {
        match self.spec {
            RateSpec::Constant { value } => value * rho,
            RateSpec::Linear { a, b } => a * rho + 0.5 * b * rho * rho,
            RateSpec::Quadratic { a, b } => a * rho + b * rho * rho * rho / 3.0,
            RateSpec::SigmoidExp {
                lam_lo,
                lam_hi,
                alpha,
                center,
            } => {
                lam_lo * rho
                    + (lam_hi - lam_lo) / alpha
                        * (softplus(alpha * (rho - center)) - softplus(-alpha * center))
            }
            RateSpec::SigmoidRational {
                lam_lo,
                lam_hi,
                alpha,
            } => {
                let sa = alpha.sqrt();
                lam_hi * rho - (lam_hi - lam_lo) * (sa * rho).atan() / sa
            }
            RateSpec::PiecewiseLinearStep {
                lam_lo,
                lam_hi,
                eps,
                center,
            } => {
                let anti = |x| unit_ramp(x, center, eps).2;
                lam_lo * rho + (lam_hi - lam_lo) * (anti(rho) - anti(0.0))
            }
            RateSpec::DoubleSigmoid {
                lam_lo,
                lam_mid,
                lam_hi,
                rho_lo,
                rho_hi,
                delta,
            } => {
                let a1 = |x| unit_smooth_step(x, rho_lo, delta).2;
                let a2 = |x| unit_smooth_step(x, rho_hi, delta).2;
                lam_lo * rho
                    + (lam_mid - lam_lo) * (a1(rho) - a1(0.0))
                    + (lam_hi - lam_mid) * (a2(rho) - a2(0.0))
            }
            RateSpec::TripleStep { lam_lo, ramps } => ramps.iter().fold(lam_lo * rho, |acc, r| {
                let anti = |x| unit_ramp(x, r.center, r.eps).2;
                acc + r.rise * (anti(rho) - anti(0.0))
            }),
        }
    }

    /// A constant `c > 0` with `f(ρ) ≥ c` for all `ρ ≥ 0`.
    pub fn lower_bound(&self) -> f64 {
        match self.spec {
            RateSpec::Constant { value } => value,
            RateSpec::Linear { a, .. } | RateSpec::Quadratic { a, .. } => a,
            RateSpec::SigmoidExp { lam_lo, .. }
            | RateSpec::SigmoidRational { lam_lo, .. }
            | RateSpec::PiecewiseLinearStep { lam_lo, .. }
            | RateSpec::DoubleSigmoid { lam_lo, .. }
            | RateSpec::TripleStep { lam_lo, .. } => lam_lo,
        }
    }

    /// Breakpoints where the derivative may jump. Empty for smooth kinds.
    pub fn kinks(&self) -> Vec<f64> {
        match self.spec {
            RateSpec::PiecewiseLinearStep { eps, center, .. } => vec![center - eps, center + eps],
            RateSpec::TripleStep { ramps, .. } => ramps
                .iter()
                .flat_map(|r| [r.center - r.eps, r.center + r.eps])
                .collect(),
            _ => Vec::new(),
        }
    }

    /// `ρ ↦ value_scale · f(density_scale · ρ)`, expressed in the same kind.
    pub fn rescaled(&self, value_scale: f64, density_scale: f64) -> Result<Self> {
        positive("value_scale", value_scale)?;
        positive("density_scale", density_scale)?;
        let k = value_scale;
        let m = density_scale;
        let spec = match self.spec {
            RateSpec::Constant { value } => RateSpec::Constant { value: k * value },
            RateSpec::Linear { a, b } => RateSpec::Linear {
                a: k * a,
                b: k * b * m,
            },
            RateSpec::Quadratic { a, b } => RateSpec::Quadratic {
                a: k * a,
                b: k * b * m * m,
            },
            RateSpec::SigmoidExp {
                lam_lo,
                lam_hi,
                alpha,
                center,
            } => RateSpec::SigmoidExp {
                lam_lo: k * lam_lo,
                lam_hi: k * lam_hi,
                alpha: alpha * m,
                center: center / m,
            },
            RateSpec::SigmoidRational {
                lam_lo,
                lam_hi,
                alpha,
            } => RateSpec::SigmoidRational {
                lam_lo: k * lam_lo,
                lam_hi: k * lam_hi,
                alpha: alpha * m * m,
            },
            RateSpec::PiecewiseLinearStep {
                lam_lo,
                lam_hi,
                eps,
                center,
            } => RateSpec::PiecewiseLinearStep {
                lam_lo: k * lam_lo,
                lam_hi: k * lam_hi,
                eps: eps / m,
                center: center / m,
            },
            RateSpec::DoubleSigmoid {
                lam_lo,
                lam_mid,
                lam_hi,
                rho_lo,
                rho_hi,
                delta,
            } => RateSpec::DoubleSigmoid {
                lam_lo: k * lam_lo,
                lam_mid: k * lam_mid,
                lam_hi: k * lam_hi,
                rho_lo: rho_lo / m,
                rho_hi: rho_hi / m,
                delta: delta / m,
            },
            RateSpec::TripleStep { lam_lo, ramps } => RateSpec::TripleStep {
                lam_lo: k * lam_lo,
                ramps: ramps.map(|r| Ramp {
                    rise: k * r.rise,
                    center: r.center / m,
                    eps: r.eps / m,
                }),
            },
        };
        Self::new(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sig_exp() -> RateFunction {
        RateFunction::new(RateSpec::SigmoidExp {
            lam_lo: 2.5,
            lam_hi: 8.0,
            alpha: 10.0,
            center: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn sigmoid_midpoint() {
        let (v, d) = sig_exp().eval(1.0);
        assert_relative_eq!(v, 5.25, epsilon = 1e-14);
        assert_relative_eq!(d, 13.75, epsilon = 1e-12);
    }

    #[test]
    fn constant_is_flat() {
        let f = RateFunction::constant(3.0).unwrap();
        for rho in [0.0, 0.5, 7.0] {
            assert_eq!(f.eval(rho), (3.0, 0.0));
        }
    }

    #[test]
    fn piecewise_step_ends_and_slope() {
        let (lo, hi, eps) = (1.0, 4.0, 0.1);
        let f = RateFunction::new(RateSpec::PiecewiseLinearStep {
            lam_lo: lo,
            lam_hi: hi,
            eps,
            center: 1.0,
        })
        .unwrap();
        assert_relative_eq!(f.value(1.0 - eps), lo, epsilon = 1e-14);
        assert_relative_eq!(f.value(1.0 + eps), hi, epsilon = 1e-14);
        assert_relative_eq!(f.derivative(1.0), (hi - lo) / (2.0 * eps), epsilon = 1e-12);
        // right derivative at the kinks
        assert_relative_eq!(f.derivative(1.0 - eps), (hi - lo) / (2.0 * eps), epsilon = 1e-12);
        assert_eq!(f.derivative(1.0 + eps), 0.0);
    }

    #[test]
    fn double_sigmoid_rejects_wide_delta() {
        let spec = RateSpec::DoubleSigmoid {
            lam_lo: 2.5,
            lam_mid: 5.25,
            lam_hi: 8.0,
            rho_lo: 0.67,
            rho_hi: 1.33,
            delta: 0.4,
        };
        assert!(matches!(RateFunction::new(spec), Err(Error::Parameter(_))));
    }

    #[test]
    fn rejects_nonpositive_floor() {
        assert!(RateFunction::constant(0.0).is_err());
        assert!(RateFunction::new(RateSpec::Linear { a: -1.0, b: 1.0 }).is_err());
        assert!(RateFunction::new(RateSpec::SigmoidExp {
            lam_lo: 0.0,
            lam_hi: 1.0,
            alpha: 1.0,
            center: 1.0
        })
        .is_err());
    }

    #[test]
    fn json_round_trip_validates() {
        let f: RateFunction =
            serde_json::from_str(r#"{"kind": "sigmoid_exp", "lam_lo": 2.5, "lam_hi": 8.0, "alpha": 10.0}"#)
                .unwrap();
        assert_eq!(f, sig_exp());
        let bad = serde_json::from_str::<RateFunction>(r#"{"kind": "constant", "value": -1}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn rescaling_matches_definition() {
        let f = sig_exp();
        let g = f.rescaled(3.0, 0.5).unwrap();
        for rho in [0.1, 1.0, 2.0, 3.3] {
            assert_relative_eq!(g.value(rho), 3.0 * f.value(0.5 * rho), epsilon = 1e-12);
        }
    }
}
