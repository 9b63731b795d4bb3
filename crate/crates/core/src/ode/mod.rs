//! Space-independent dynamics.
//!
//! With total mass fixed at 2 the homogeneous system reduces to three
//! unknowns: the half density difference `d = (u − v)/2` and the
//! reversible densities `u₁`, `v₁`.

mod hopf;
mod integrate;
mod stability;
mod steady;

pub use hopf::{hopf_sweep, hopf_thresholds, HopfThresholds, SweepOptions, SweepRow};
pub use integrate::{integrate_ode, LimitSet, Trajectory};
pub use stability::{
    isotropic_conditions, isotropic_constants, isotropic_eigenvalues, jacobian_eigenvalues, numeric_jacobian, ode_stability,
    IsotropicOdeConditions, StabilityVerdict,
};
pub use steady::{find_steady_states, SteadyKind, SteadyState};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::MARGINAL_BAND;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeState {
    pub d: f64,
    pub u1: f64,
    pub v1: f64,
}

impl OdeState {
    pub fn new(d: f64, u1: f64, v1: f64) -> Self {
        Self { d, u1, v1 }
    }

    /// The isotropic fixed point `d = 0`, `u₁ = v₁ = Γ(1)`.
    pub fn isotropic(m: &ModelParams) -> Self {
        let g = m.gamma.value(1.0);
        let f = g / (g + m.lambda.value(1.0));
        Self::new(0.0, f, f)
    }

    /// Largest violation of `|d| ≤ 1`, `0 ≤ u₁ ≤ 1 + d`, `0 ≤ v₁ ≤ 1 − d`.
    pub fn invariant_violation(&self) -> f64 {
        [
            self.d.abs() - 1.0,
            -self.u1,
            self.u1 - (1.0 + self.d),
            -self.v1,
            self.v1 - (1.0 - self.d),
        ]
        .into_iter()
        .fold(0.0_f64, f64::max)
    }

    pub(crate) fn to_array(self) -> [f64; 3] {
        [self.d, self.u1, self.v1]
    }

    pub(crate) fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Tri-state stability verdict with a marginal band of ±1e-8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn from_max_real(max_real: f64) -> Self {
        if max_real < -MARGINAL_BAND {
            Stability::Stable
        } else if max_real > MARGINAL_BAND {
            Stability::Unstable
        } else {
            Stability::Marginal
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }
}

/// Right-hand side `(ḋ, u̇₁, v̇₁)`.
pub fn ode_rhs(s: &OdeState, m: &ModelParams) -> [f64; 3] {
    let lp = m.lambda.value(1.0 + s.d);
    let lm = m.lambda.value(1.0 - s.d);
    let gp = m.gamma.value(1.0 + s.d);
    let gm = m.gamma.value(1.0 - s.d);
    [
        lp * s.v1 - lm * s.u1,
        gm * (1.0 + s.d - s.u1) - lm * s.u1,
        gp * (1.0 - s.d - s.v1) - lp * s.v1,
    ]
}

/// `Q(ρ) = λγ/(λ+γ)` and its derivative in ρ.
fn turnover(m: &ModelParams, rho: f64) -> (f64, f64) {
    let (l, dl) = m.lambda.eval(rho);
    let (g, dg) = m.gamma.eval(rho);
    let s = l + g;
    (l * g / s, (dl * g * g + dg * l * l) / (s * s))
}

/// `G(d) = (1−d) Q₊(d) − (1+d) Q₋(d)` with `Q±(d) = Q(1 ± d)`, and `G′(d)`.
///
/// Roots of `G` in (−1, 1) are exactly the homogeneous steady states.
pub fn steady_state_function(d: f64, m: &ModelParams) -> Result<(f64, f64)> {
    if !(d.abs() < 1.0) {
        return Err(Error::Domain(format!("G(d) requires |d| < 1, got {d}")));
    }
    Ok(steady_state_function_unchecked(d, m))
}

pub(crate) fn steady_state_function_unchecked(d: f64, m: &ModelParams) -> (f64, f64) {
    let (qp, dqp) = turnover(m, 1.0 + d);
    let (qm, dqm) = turnover(m, 1.0 - d);
    let g = (1.0 - d) * qp - (1.0 + d) * qm;
    let gp = -qp + (1.0 - d) * dqp - qm + (1.0 + d) * dqm;
    (g, gp)
}

/// Sign quantity `τ`; `τ > 0` guarantees a pair of anisotropic steady states.
pub fn tau(m: &ModelParams) -> f64 {
    let (l, dl) = m.lambda.eval(1.0);
    let (g, dg) = m.gamma.eval(1.0);
    g / l * (dl - l) + l / g * (dg - g)
}
