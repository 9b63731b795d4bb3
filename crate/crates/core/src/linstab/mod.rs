//! Stability of homogeneous steady states under transport.
//!
//! Perturbations `r₀ e^{ξt + ikx}` with `k = 2πn` grow at the eigenvalues ξ
//! of `M − ikT`, where `M` linearizes the reaction terms and
//! `T = diag(1, −1, 1, −1)` carries the transport directions.

mod spectrum;

pub use spectrum::{
    dispersion_table, linearization, spectrum_at_k, symbol_matrix, DispersionPoint,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::ode::{isotropic_constants as iso_constants, steady_state_function, SteadyKind, SteadyState};
use crate::MARGINAL_BAND;

pub const DEFAULT_N_MAX: usize = 64;

/// Coefficients of `x⁴ + a₃x³ + a₂x² + a₁x + a₀` and the two Hurwitz
/// determinants `p = a₃a₂ − a₁`, `q = a₃a₂a₁ − a₁² − a₃²a₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhCoefficients {
    pub k: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhVerdict {
    Pass,
    Fail,
    Marginal,
}

impl RhCoefficients {
    /// All Hurwitz quantities clear the marginal band: every root in the open left half-plane.
    pub fn verdict(&self) -> RhVerdict {
        let all = [self.a0, self.a1, self.a2, self.a3, self.p, self.q];
        if all.iter().all(|&x| x > MARGINAL_BAND) {
            RhVerdict::Pass
        } else if all.iter().any(|&x| x < -MARGINAL_BAND) {
            RhVerdict::Fail
        } else {
            RhVerdict::Marginal
        }
    }
}

/// Quartic coefficients at the isotropic state in closed form.
pub fn rh_coefficients(m: &ModelParams, k: f64) -> RhCoefficients {
    let (l, g, b, c) = iso_constants(m);
    let k2 = k * k;
    let s = g + l;
    let e = g * l - b * g - c * l;
    let a0 = k2 * (k2 + g * g + l * l + 2.0 * l * (b - c));
    let a1 = 2.0 * (k2 * (s - b) + s * e);
    let a2 = 2.0 * k2 + s * (s - 2.0 * b) + 2.0 * e;
    let a3 = 2.0 * (s - b);
    let p0 = 2.0 * (s - 2.0 * b) * (s * (s - b) + e);
    let p1 = 2.0 * (s - b);
    let q0 = 4.0 * s * e * (s - 2.0 * b) * (s * (s - b) + e);
    let q1 = 16.0 * (s - b).powi(2) * (g * l - b * s);
    RhCoefficients {
        k,
        a0,
        a1,
        a2,
        a3,
        p: p1 * k2 + p0,
        q: q1 * k2 + q0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportConditions {
    /// `0 ≤ λ′(1) < λ(1)`
    pub lambda_prime_ok: bool,
    /// `γ′(1) < γ(1)`
    pub gamma_prime_ok: bool,
    /// `λ′(1) > λ(1)`
    pub super_linear: bool,
}

impl TransportConditions {
    pub fn sufficient(&self) -> bool {
        self.lambda_prime_ok && self.gamma_prime_ok
    }
}

pub fn transport_conditions(m: &ModelParams) -> TransportConditions {
    let (l, dl) = m.lambda.eval(1.0);
    let (g, dg) = m.gamma.eval(1.0);
    TransportConditions {
        lambda_prime_ok: dl >= -MARGINAL_BAND && dl < l - MARGINAL_BAND,
        gamma_prime_ok: dg < g - MARGINAL_BAND,
        super_linear: dl > l + MARGINAL_BAND,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportVerdict {
    Stable,
    Unstable,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub isotropic_conditions: TransportConditions,
    pub rh_coefficients: Vec<RhCoefficients>,
    pub verdict: TransportVerdict,
    /// The sufficient conditions held and every sampled mode passed.
    pub cross_check_ok: bool,
    /// Wavenumber of largest growth over sampled `n ≥ 1`, refined continuously.
    pub most_unstable_k: f64,
    pub max_growth: f64,
}

/// Largest real part of the isotropic spectrum at wavenumber `k`.
pub fn isotropic_growth(m: &ModelParams, k: f64) -> Result<f64> {
    let ss = SteadyState::at_root(0.0, m);
    Ok(spectrum_at_k(m, &ss, k)?.max_real)
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Stability of the isotropic state for zero-mass perturbations `n = 1..=n_max`.
pub fn isotropic_transport_stability(m: &ModelParams, n_max: usize) -> Result<StabilityReport> {
    if n_max == 0 {
        return Err(Error::Parameter("n_max must be at least 1".into()));
    }
    let cond = transport_conditions(m);
    let two_pi = 2.0 * std::f64::consts::PI;
    let rh: Vec<RhCoefficients> = (1..=n_max)
        .map(|n| rh_coefficients(m, two_pi * n as f64))
        .collect();
    let any_fail = rh.iter().any(|c| c.verdict() == RhVerdict::Fail);
    let all_pass = rh.iter().all(|c| c.verdict() == RhVerdict::Pass);

    let verdict = if cond.super_linear || any_fail {
        TransportVerdict::Unstable
    } else if cond.sufficient() {
        TransportVerdict::Stable
    } else {
        TransportVerdict::Inconclusive
    };

    let growth: Vec<f64> = (1..=n_max)
        .map(|n| isotropic_growth(m, two_pi * n as f64))
        .collect::<Result<_>>()?;
    let best = growth
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i + 1)
        .unwrap();
    let lo = two_pi * (best as f64 - 1.0).max(0.5);
    let hi = two_pi * (best as f64 + 1.0);
    let (k_ref, g_ref) = golden_max(|k| isotropic_growth(m, k).unwrap_or(f64::NEG_INFINITY), lo, hi, 80);
    let (most_unstable_k, max_growth) = if g_ref >= growth[best - 1] {
        (k_ref, g_ref)
    } else {
        (two_pi * best as f64, growth[best - 1])
    };

    Ok(StabilityReport {
        isotropic_conditions: cond,
        rh_coefficients: rh,
        verdict,
        cross_check_ok: !cond.sufficient() || all_pass,
        most_unstable_k,
        max_growth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnisotropicConditions {
    /// `λ′(ū) v̄₁ < Q(v̄)` with `Q = γλ/(γ+λ)`
    pub right_movers: bool,
    /// `λ′(v̄) ū₁ < Q(ū)`
    pub left_movers: bool,
    /// `G′(d̄) < 0`
    pub g_prime_negative: bool,
}

impl AnisotropicConditions {
    pub fn all(&self) -> bool {
        self.right_movers && self.left_movers && self.g_prime_negative
    }
}

/// Necessary conditions for stability of an anisotropic state under transport.
pub fn anisotropic_necessary_conditions(ss: &SteadyState, m: &ModelParams) -> Result<AnisotropicConditions> {
    if ss.kind == SteadyKind::Isotropic {
        return Err(Error::Parameter(
            "necessary conditions apply to anisotropic steady states only".into(),
        ));
    }
    let [u, v, u1, v1] = ss.densities();
    let q = |rho: f64| {
        let (l, g) = (m.lambda.value(rho), m.gamma.value(rho));
        l * g / (l + g)
    };
    let (_, gp) = steady_state_function(ss.d_bar, m)?;
    Ok(AnisotropicConditions {
        right_movers: m.lambda.derivative(u) * v1 < q(v),
        left_movers: m.lambda.derivative(v) * u1 < q(u),
        g_prime_negative: gp < 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveFormationRange {
    pub feasible: bool,
    pub m0_lo: f64,
    pub m0_hi: f64,
}

/// Destabilization window for a sigmoid turning rate with minimum `lam_m`,
/// maximum `lam_big` and inflection density `rho_bar`, at constant aging.
pub fn wave_formation_range(lam_m: f64, lam_big: f64, rho_bar: f64) -> Result<WaveFormationRange> {
    if !(lam_m > 0.0 && lam_m < lam_big && rho_bar > 0.0) {
        return Err(Error::Parameter(format!(
            "need 0 < λ_m < λ_M and ρ̄ > 0, got ({lam_m}, {lam_big}, {rho_bar})"
        )));
    }
    let span = lam_big - lam_m;
    Ok(WaveFormationRange {
        feasible: lam_big - 3.0 * lam_m > 0.0,
        m0_lo: rho_bar * 2.0 * lam_m / span,
        m0_hi: rho_bar * 2.0 * (lam_big - 2.0 * lam_m) / span,
    })
}
