use crate::error::{Error, Result};
use crate::model::{ModelParams, RateFunction};

/// The three curves derived from a (λ, γ) pair that govern wave heights and
/// wave dynamics:
///
/// * `Λ(ρ) = ρ / λ(ρ)`, see [`DerivedCurves::ratio`]
/// * `Γ(ρ) = γ(ρ) / (γ(ρ) + λ(ρ))`, see [`DerivedCurves::fraction`]
/// * `Ω(ρ) = ∫₀^ρ λ(u) du − λ(ρ) ρ / 2`, see [`DerivedCurves::omega`]
///
/// Borrowed view, nothing cached.
#[derive(Debug, Clone, Copy)]
pub struct DerivedCurves<'a> {
    pub lambda: &'a RateFunction,
    pub gamma: &'a RateFunction,
}

impl<'a> DerivedCurves<'a> {
    pub fn new(m: &'a ModelParams) -> Self {
        Self {
            lambda: &m.lambda,
            gamma: &m.gamma,
        }
    }

    /// `Λ(ρ)`; errors for `ρ ≤ 0`.
    pub fn ratio(&self, rho: f64) -> Result<f64> {
        check_positive(rho)?;
        Ok(self.ratio_at(rho))
    }

    /// `Λ′(ρ) = (λ − ρλ′) / λ²`; errors for `ρ ≤ 0`.
    pub fn ratio_prime(&self, rho: f64) -> Result<f64> {
        check_positive(rho)?;
        Ok(self.ratio_prime_at(rho))
    }

    /// Unchecked `Λ`, also valid at 0.
    #[inline]
    pub fn ratio_at(&self, rho: f64) -> f64 {
        rho / self.lambda.value(rho)
    }

    #[inline]
    pub fn ratio_prime_at(&self, rho: f64) -> f64 {
        let (l, dl) = self.lambda.eval(rho);
        (l - rho * dl) / (l * l)
    }

    /// `λ(ρ) − ρλ′(ρ)`; positive exactly where ρ is admissible.
    #[inline]
    pub fn admissibility(&self, rho: f64) -> f64 {
        let (l, dl) = self.lambda.eval(rho);
        l - rho * dl
    }

    pub fn is_admissible(&self, rho: f64) -> bool {
        rho > 0.0 && self.admissibility(rho) > 0.0
    }

    /// `Γ(ρ) ∈ (0, 1)`.
    #[inline]
    pub fn fraction(&self, rho: f64) -> f64 {
        let g = self.gamma.value(rho);
        g / (g + self.lambda.value(rho))
    }

    /// `Ω(ρ)` with the integral anchored at 0.
    #[inline]
    pub fn omega(&self, rho: f64) -> f64 {
        self.lambda.integral(rho) - 0.5 * self.lambda.value(rho) * rho
    }
}

fn check_positive(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("Λ(ρ) requires ρ > 0, got {rho}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RateSpec;
    use approx::assert_relative_eq;

    fn model(lambda: RateSpec, gamma: RateSpec) -> ModelParams {
        ModelParams::new(
            RateFunction::new(lambda).unwrap(),
            RateFunction::new(gamma).unwrap(),
        )
    }

    fn sig_exp() -> RateSpec {
        RateSpec::SigmoidExp {
            lam_lo: 2.5,
            lam_hi: 8.0,
            alpha: 10.0,
            center: 1.0,
        }
    }

    #[test]
    fn ratio_examples() {
        let m = model(RateSpec::Constant { value: 2.0 }, RateSpec::Constant { value: 1.0 });
        assert_relative_eq!(DerivedCurves::new(&m).ratio(1.0).unwrap(), 0.5);
        let m = model(sig_exp(), RateSpec::Constant { value: 1.0 });
        assert_relative_eq!(
            DerivedCurves::new(&m).ratio(1.0).unwrap(),
            1.0 / 5.25,
            epsilon = 1e-14
        );
    }

    #[test]
    fn ratio_rejects_nonpositive() {
        let m = model(sig_exp(), RateSpec::Constant { value: 1.0 });
        let c = DerivedCurves::new(&m);
        assert!(matches!(c.ratio(0.0), Err(Error::Domain(_))));
        assert!(matches!(c.ratio_prime(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn linear_ratio_is_increasing() {
        let m = model(RateSpec::Linear { a: 0.7, b: 3.0 }, RateSpec::Constant { value: 1.0 });
        let c = DerivedCurves::new(&m);
        for i in 1..500 {
            assert!(c.ratio_prime_at(i as f64 * 0.01) > 0.0);
        }
    }

    #[test]
    fn fraction_examples() {
        let one = RateSpec::Constant { value: 1.0 };
        let m = model(one.clone(), one.clone());
        for rho in [0.0, 0.3, 4.0] {
            assert_eq!(DerivedCurves::new(&m).fraction(rho), 0.5);
        }
        let m = model(sig_exp(), one);
        assert_relative_eq!(DerivedCurves::new(&m).fraction(1.0), 0.16, epsilon = 1e-14);
        let m = model(RateSpec::Constant { value: 2.5 }, RateSpec::Constant { value: 1.5 });
        assert_relative_eq!(DerivedCurves::new(&m).fraction(0.7), 1.5 / 4.0);
    }

    #[test]
    fn omega_constant() {
        let m = model(RateSpec::Constant { value: 2.0 }, RateSpec::Constant { value: 1.0 });
        let c = DerivedCurves::new(&m);
        assert_relative_eq!(c.omega(2.0), 2.0, epsilon = 1e-14);
        assert_eq!(c.omega(0.0), 0.0);
    }
}
