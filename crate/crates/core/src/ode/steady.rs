use serde::{Deserialize, Serialize};

use super::{ode_stability, steady_state_function_unchecked, OdeState, Stability};
use crate::model::ModelParams;

const SCAN_BRACKETS: usize = 2048;
const SCAN_EDGE: f64 = 1e-9;
const BISECT_TOL: f64 = 1e-12;
const DEDUP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyKind {
    Isotropic,
    Anisotropic,
}

/// A space-homogeneous steady state, parameterized by `d̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub d_bar: f64,
    pub u1: f64,
    pub v1: f64,
    pub kind: SteadyKind,
    pub stable: Stability,
}

impl SteadyState {
    /// Steady state at a root `d̄` of `G`, with `u₁`, `v₁` from the
    /// steady-state relations. Stability is left `Marginal` until evaluated.
    pub fn at_root(d_bar: f64, m: &ModelParams) -> Self {
        let frac = |rho: f64| {
            let g = m.gamma.value(rho);
            g / (g + m.lambda.value(rho))
        };
        Self {
            d_bar,
            u1: frac(1.0 - d_bar) * (1.0 + d_bar),
            v1: frac(1.0 + d_bar) * (1.0 - d_bar),
            kind: if d_bar == 0.0 {
                SteadyKind::Isotropic
            } else {
                SteadyKind::Anisotropic
            },
            stable: Stability::Marginal,
        }
    }

    pub fn state(&self) -> OdeState {
        OdeState::new(self.d_bar, self.u1, self.v1)
    }

    /// Densities `(ū, v̄, ū₁, v̄₁)`.
    pub fn densities(&self) -> [f64; 4] {
        [1.0 + self.d_bar, 1.0 - self.d_bar, self.u1, self.v1]
    }
}

fn bisect_g(mut a: f64, mut ga: f64, mut b: f64, m: &ModelParams) -> f64 {
    while b - a > BISECT_TOL {
        let mid = 0.5 * (a + b);
        let gm = steady_state_function_unchecked(mid, m).0;
        if gm == 0.0 {
            return mid;
        }
        if (gm > 0.0) == (ga > 0.0) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// All homogeneous steady states, isotropic first, then anisotropic pairs
/// in increasing `d̄`. Each carries its stability verdict.
///
/// Roots are located by a uniform sign scan of `G` followed by bisection,
/// so a root where `G` only touches zero without changing sign is missed.
pub fn find_steady_states(m: &ModelParams) -> Vec<SteadyState> {
    let lo = -1.0 + SCAN_EDGE;
    let hi = 1.0 - SCAN_EDGE;
    let h = (hi - lo) / SCAN_BRACKETS as f64;
    let nodes: Vec<(f64, f64)> = (0..=SCAN_BRACKETS)
        .map(|i| {
            let d = if i == SCAN_BRACKETS { hi } else { lo + h * i as f64 };
            (d, steady_state_function_unchecked(d, m).0)
        })
        .collect();

    let mut positive_roots: Vec<f64> = Vec::new();
    for w in nodes.windows(2) {
        let (a, ga) = w[0];
        let (b, gb) = w[1];
        let root = if ga == 0.0 {
            Some(a)
        } else if ga * gb < 0.0 {
            Some(bisect_g(a, ga, b, m))
        } else {
            None
        };
        if let Some(r) = root {
            if r > DEDUP_TOL && positive_roots.iter().all(|p| (p - r).abs() > DEDUP_TOL) {
                positive_roots.push(r);
            }
        }
    }
    positive_roots.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut roots = vec![0.0];
    for &r in positive_roots.iter().rev() {
        roots.push(-r);
    }
    roots.extend(positive_roots.iter().copied());

    roots
        .into_iter()
        .map(|d| {
            let mut ss = SteadyState::at_root(d, m);
            if let Ok(v) = ode_stability(&ss, m) {
                ss.stable = v.stability;
            }
            ss
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RateFunction, RateSpec};
    use crate::ode::{ode_rhs, steady_state_function, tau};

    fn hopf_model(gamma: f64) -> ModelParams {
        ModelParams::new(
            RateFunction::new(RateSpec::SigmoidExp {
                lam_lo: 2.5,
                lam_hi: 8.0,
                alpha: 10.0,
                center: 1.0,
            })
            .unwrap(),
            RateFunction::constant(gamma).unwrap(),
        )
    }

    /// Independent oracle: sign changes of G on a fine uniform grid.
    fn brute_force_positive_roots(m: &ModelParams) -> Vec<f64> {
        let n = 200_000;
        let mut out = Vec::new();
        let mut prev = steady_state_function(1e-6, m).unwrap().0;
        for i in 1..n {
            let d = 1e-6 + (1.0 - 2e-6) * i as f64 / n as f64;
            let g = steady_state_function(d, m).unwrap().0;
            if prev * g < 0.0 {
                out.push(d);
            }
            prev = g;
        }
        out
    }

    #[test]
    fn unit_rates_have_only_isotropic_state() {
        let m = ModelParams::new(
            RateFunction::constant(1.0).unwrap(),
            RateFunction::constant(1.0).unwrap(),
        );
        let ss = find_steady_states(&m);
        assert_eq!(ss.len(), 1);
        assert_eq!(ss[0].kind, SteadyKind::Isotropic);
        assert_eq!(ss[0].d_bar, 0.0);
        assert!((ss[0].u1 - 0.5).abs() < 1e-15 && (ss[0].v1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_with_positive_tau_has_pair() {
        // γ = 1 is below the Hopf range but τ is evaluated on its own here
        let m = hopf_model(1.0);
        let t = tau(&m);
        // τ = γ/λ (λ′ − λ) + λ/γ (γ′ − γ) at ρ = 1
        let expected = (13.75 - 5.25) / 5.25 - 5.25;
        assert!((t - expected).abs() < 1e-12);

        for gamma in [1.0, 4.0, 10.0] {
            let m = hopf_model(gamma);
            let ss = find_steady_states(&m);
            let oracle = brute_force_positive_roots(&m);
            let found: Vec<f64> = ss.iter().filter(|s| s.d_bar > 0.0).map(|s| s.d_bar).collect();
            assert_eq!(found.len(), oracle.len(), "gamma={gamma}");
            for (f, o) in found.iter().zip(oracle.iter()) {
                assert!((f - o).abs() < 1e-5);
            }
            if tau(&m) > 0.0 {
                assert!(!found.is_empty(), "τ > 0 must give an anisotropic pair");
            }
            // mirrored pairs
            for s in &ss {
                assert!(ss.iter().any(|o| (o.d_bar + s.d_bar).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn every_steady_state_zeroes_the_rhs() {
        for gamma in [0.5, 2.0, 5.0, 20.0] {
            let m = hopf_model(gamma);
            for s in find_steady_states(&m) {
                let r = ode_rhs(&s.state(), &m);
                let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!(norm < 1e-9, "gamma={gamma} d={} |rhs|={norm}", s.d_bar);
            }
        }
    }
}
