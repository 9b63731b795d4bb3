use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ode_rhs, steady_state_function_unchecked, tau, OdeState, Stability, SteadyKind, SteadyState};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::poly;

const ROOT_TOL: f64 = 1e-9;
const JACOBIAN_STEP: f64 = 1e-6;

/// The two conditions for stability of the isotropic state, evaluated
/// exactly as stated (condition 2 is an "or" of two alternatives).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsotropicOdeConditions {
    pub tau: f64,
    /// condition 1: τ < 0
    pub tau_negative: bool,
    /// first alternative of condition 2: λ′(1) < 2λ(1)
    pub lambda_prime_below_twice: bool,
    /// second alternative of condition 2: γ(1) outside the closed interval
    /// `λ′−λ ∓ √(λ′(λ′−2λ))` (true when that interval is empty)
    pub gamma_outside_interval: bool,
    pub condition2: bool,
}

impl IsotropicOdeConditions {
    pub fn holds(&self) -> bool {
        self.tau_negative && self.condition2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub stability: Stability,
    pub eigenvalues: Vec<Complex64>,
    pub max_real: f64,
    /// Only for the isotropic state.
    pub isotropic: Option<IsotropicOdeConditions>,
    /// `G′(d̄)`, only for anisotropic states.
    pub g_prime: Option<f64>,
    /// Necessary condition `G′(d̄) < 0`, only for anisotropic states.
    pub necessary_condition: Option<bool>,
}

/// Linearization constants `(l, g, b, c)` at the isotropic state.
pub fn isotropic_constants(m: &ModelParams) -> (f64, f64, f64, f64) {
    let (l, dl) = m.lambda.eval(1.0);
    let (g, dg) = m.gamma.eval(1.0);
    (l, g, dl * g / (g + l), dg * l / (g + l))
}

/// Roots of `(z + l + g)[z² + (l + g − 2b) z + 2(lg − bg − lc)]`.
pub fn isotropic_eigenvalues(m: &ModelParams) -> [Complex64; 3] {
    let (l, g, b, c) = isotropic_constants(m);
    let [z1, z2] = poly::quadratic_roots(l + g - 2.0 * b, 2.0 * (l * g - b * g - l * c));
    [Complex64::new(-l - g, 0.0), z1, z2]
}

pub fn isotropic_conditions(m: &ModelParams) -> IsotropicOdeConditions {
    let (l, dl) = m.lambda.eval(1.0);
    let g = m.gamma.value(1.0);
    let t = tau(m);
    let lambda_prime_below_twice = dl < 2.0 * l;
    let disc = dl * (dl - 2.0 * l);
    let gamma_outside_interval = if disc < 0.0 {
        true
    } else {
        let s = disc.sqrt();
        g < dl - l - s || g > dl - l + s
    };
    IsotropicOdeConditions {
        tau: t,
        tau_negative: t < 0.0,
        lambda_prime_below_twice,
        gamma_outside_interval,
        condition2: lambda_prime_below_twice || gamma_outside_interval,
    }
}

/// Central finite-difference Jacobian of the ODE right-hand side.
pub fn numeric_jacobian(s: &OdeState, m: &ModelParams) -> [[f64; 3]; 3] {
    let base = s.to_array();
    let mut jac = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut plus = base;
        let mut minus = base;
        plus[j] += JACOBIAN_STEP;
        minus[j] -= JACOBIAN_STEP;
        let fp = ode_rhs(&OdeState::from_array(plus), m);
        let fm = ode_rhs(&OdeState::from_array(minus), m);
        for i in 0..3 {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * JACOBIAN_STEP);
        }
    }
    jac
}

pub fn jacobian_eigenvalues(jac: &[[f64; 3]; 3]) -> Result<Vec<Complex64>> {
    let a: Vec<Vec<Complex64>> = jac
        .iter()
        .map(|row| row.iter().map(|&x| Complex64::new(x, 0.0)).collect())
        .collect();
    poly::eigenvalues(&a)
}

fn max_real(z: &[Complex64]) -> f64 {
    z.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Local stability of a homogeneous steady state of the ODE system.
pub fn ode_stability(ss: &SteadyState, m: &ModelParams) -> Result<StabilityVerdict> {
    if !(ss.d_bar.abs() < 1.0) {
        return Err(Error::Domain(format!("d̄ = {} outside (-1, 1)", ss.d_bar)));
    }
    let (g_val, g_prime) = steady_state_function_unchecked(ss.d_bar, m);
    if g_val.abs() > ROOT_TOL {
        return Err(Error::Numeric(format!(
            "d̄ = {} is not a steady state: |G(d̄)| = {:.3e}",
            ss.d_bar,
            g_val.abs()
        )));
    }
    match ss.kind {
        SteadyKind::Isotropic => {
            let eig = isotropic_eigenvalues(m).to_vec();
            let mr = max_real(&eig);
            Ok(StabilityVerdict {
                stability: Stability::from_max_real(mr),
                max_real: mr,
                eigenvalues: eig,
                isotropic: Some(isotropic_conditions(m)),
                g_prime: None,
                necessary_condition: None,
            })
        }
        SteadyKind::Anisotropic => {
            let eig = jacobian_eigenvalues(&numeric_jacobian(&ss.state(), m))?;
            let mr = max_real(&eig);
            let necessary = g_prime < 0.0;
            // the determinant condition is necessary, never overridden by
            // eigenvalue noise in the marginal band
            let stability = if !necessary && g_prime > crate::MARGINAL_BAND {
                Stability::Unstable
            } else {
                Stability::from_max_real(mr)
            };
            Ok(StabilityVerdict {
                stability,
                max_real: mr,
                eigenvalues: eig,
                isotropic: None,
                g_prime: Some(g_prime),
                necessary_condition: Some(necessary),
            })
        }
    }
}
