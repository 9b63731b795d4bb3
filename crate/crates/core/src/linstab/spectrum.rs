use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rh_coefficients, RhVerdict};
use crate::error::Result;
use crate::model::ModelParams;
use crate::ode::{SteadyKind, SteadyState};
use crate::poly;

/// Growth rates of one Fourier mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionPoint {
    pub k: f64,
    pub eigenvalues: Vec<Complex64>,
    pub max_real: f64,
    /// Routh–Hurwitz verdict, isotropic states only. `None` also when marginal.
    pub rh_pass: Option<bool>,
}

/// Jacobian of the reaction terms in `(u, v, u₁, v₁)` at the given densities.
pub fn linearization(m: &ModelParams, densities: [f64; 4]) -> [[f64; 4]; 4] {
    let [u, v, u1, v1] = densities;
    let (lu, dlu) = m.lambda.eval(u);
    let (lv, dlv) = m.lambda.eval(v);
    let (gu, dgu) = m.gamma.eval(u);
    let (gv, dgv) = m.gamma.eval(v);
    let row_u = [dlu * v1, -dlv * u1, -lv, lu];
    [
        row_u,
        row_u.map(|x| -x),
        [gv, dgv * (u - u1) - dlv * u1, -gv - lv, 0.0],
        [dgu * (v - v1) - dlu * v1, gu, 0.0, -gu - lu],
    ]
}

/// `M − ikT` with `T = diag(1, −1, 1, −1)`.
pub fn symbol_matrix(jac: &[[f64; 4]; 4], k: f64) -> Vec<Vec<Complex64>> {
    const DIR: [f64; 4] = [1.0, -1.0, 1.0, -1.0];
    (0..4)
        .map(|i| {
            (0..4)
                .map(|j| {
                    let im = if i == j { -k * DIR[i] } else { 0.0 };
                    Complex64::new(jac[i][j], im)
                })
                .collect()
        })
        .collect()
}

/// Eigenvalues of `M − ikT` at a homogeneous steady state.
pub fn spectrum_at_k(m: &ModelParams, ss: &SteadyState, k: f64) -> Result<DispersionPoint> {
    let jac = linearization(m, ss.densities());
    let eigenvalues = poly::eigenvalues(&symbol_matrix(&jac, k))?;
    let max_real = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let rh_pass = match ss.kind {
        SteadyKind::Isotropic => match rh_coefficients(m, k).verdict() {
            RhVerdict::Pass => Some(true),
            RhVerdict::Fail => Some(false),
            RhVerdict::Marginal => None,
        },
        SteadyKind::Anisotropic => None,
    };
    Ok(DispersionPoint {
        k,
        eigenvalues,
        max_real,
        rh_pass,
    })
}

/// Spectra at `k = 2πn`, `n = 0..=n_max`, computed in parallel.
pub fn dispersion_table(m: &ModelParams, ss: &SteadyState, n_max: usize) -> Result<Vec<DispersionPoint>> {
    (0..=n_max)
        .into_par_iter()
        .map(|n| spectrum_at_k(m, ss, 2.0 * std::f64::consts::PI * n as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RateFunction, RateSpec};
    use crate::ode::{find_steady_states, isotropic_constants};
    use proptest::prelude::*;

    fn model(lo: f64, hi: f64, alpha: f64, ga: f64, gb: f64) -> ModelParams {
        ModelParams::new(
            RateFunction::new(RateSpec::SigmoidExp { lam_lo: lo, lam_hi: hi, alpha, center: 1.0 }).unwrap(),
            RateFunction::new(RateSpec::Linear { a: ga, b: gb }).unwrap(),
        )
    }

    #[test]
    fn isotropic_linearization_has_block_form() {
        let m = model(2.5, 8.0, 10.0, 0.7, 0.4);
        let (l, g, b, c) = isotropic_constants(&m);
        let jac = linearization(&m, SteadyState::at_root(0.0, &m).densities());
        let expected = [
            [b, -b, -l, l],
            [-b, b, l, -l],
            [g, c - b, -g - l, 0.0],
            [c - b, g, 0.0, -g - l],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((jac[i][j] - expected[i][j]).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn analytic_linearization_matches_finite_differences() {
        let m = model(2.5, 8.0, 10.0, 1.0, 0.3);
        let rhs = |x: [f64; 4]| {
            let [u, v, u1, v1] = x;
            let (lu, lv) = (m.lambda.value(u), m.lambda.value(v));
            let (gu, gv) = (m.gamma.value(u), m.gamma.value(v));
            let f = lu * v1 - lv * u1;
            [f, -f, gv * (u - u1) - lv * u1, gu * (v - v1) - lu * v1]
        };
        let x = [1.3, 0.7, 0.4, 0.2];
        let jac = linearization(&m, x);
        let h = 1e-6;
        for j in 0..4 {
            let (mut p, mut q) = (x, x);
            p[j] += h;
            q[j] -= h;
            let (fp, fq) = (rhs(p), rhs(q));
            for i in 0..4 {
                let fd = (fp[i] - fq[i]) / (2.0 * h);
                assert!((fd - jac[i][j]).abs() < 1e-6, "({i},{j}) {fd} vs {}", jac[i][j]);
            }
        }
    }

    #[test]
    fn zero_mode_at_k_zero() {
        let m = model(2.5, 8.0, 10.0, 1.0, 0.0);
        let p = spectrum_at_k(&m, &SteadyState::at_root(0.0, &m), 0.0).unwrap();
        assert!(p.eigenvalues.iter().any(|z| z.norm() < 1e-9));
    }

    #[test]
    fn unit_rates_decay_at_first_mode() {
        let m = model(1.0, 1.0, 1.0, 1.0, 0.0);
        let p = spectrum_at_k(&m, &SteadyState::at_root(0.0, &m), 2.0 * std::f64::consts::PI).unwrap();
        assert!(p.max_real < 0.0);
        assert_eq!(p.rh_pass, Some(true));
    }

    #[test]
    fn anisotropic_spectrum_respects_necessary_conditions() {
        use crate::linstab::anisotropic_necessary_conditions;
        for gamma in [4.0, 6.0, 10.0, 20.0] {
            let m = model(2.5, 8.0, 10.0, gamma, 0.0);
            for ss in find_steady_states(&m).iter().filter(|s| s.kind == SteadyKind::Anisotropic) {
                let table = dispersion_table(&m, ss, 64).unwrap();
                let stable = table[1..].iter().all(|p| p.max_real < -1e-8);
                let cond = anisotropic_necessary_conditions(ss, &m).unwrap();
                if stable {
                    assert!(cond.all(), "γ = {gamma}, d̄ = {}", ss.d_bar);
                }
                if !cond.all() {
                    assert!(!stable);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // closed-form quartic coefficients vs Faddeev–LeVerrier expansion of M − ikT
        #[test]
        fn symbolic_coefficients_match_expansion(
            lo in 0.2f64..4.0, h in 0.0f64..8.0, alpha in 0.1f64..12.0,
            ga in 0.1f64..5.0, gb in 0.0f64..3.0, n in 0usize..33,
        ) {
            let m = model(lo, lo + h, alpha, ga, gb);
            let k = 2.0 * std::f64::consts::PI * n as f64;
            let cp = poly::char_poly(&symbol_matrix(&linearization(&m, SteadyState::at_root(0.0, &m).densities()), k));
            let rh = rh_coefficients(&m, k);
            for (got, want) in cp.iter().zip([rh.a0, rh.a1, rh.a2, rh.a3, 1.0]) {
                let scale = want.abs().max(1.0);
                prop_assert!((got.re - want).abs() < 1e-9 * scale, "{} vs {}", got.re, want);
                prop_assert!(got.im.abs() < 1e-9 * scale);
            }
        }

        #[test]
        fn negative_k_gives_conjugate_spectrum(
            lo in 0.2f64..4.0, h in 0.0f64..8.0, alpha in 0.1f64..12.0,
            ga in 0.1f64..5.0, gb in 0.0f64..3.0, k in 0.0f64..100.0,
        ) {
            let m = model(lo, lo + h, alpha, ga, gb);
            let ss = SteadyState::at_root(0.0, &m);
            let a = spectrum_at_k(&m, &ss, k).unwrap();
            let b = spectrum_at_k(&m, &ss, -k).unwrap();
            for z in &a.eigenvalues {
                let best = b.eigenvalues.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
                prop_assert!(best < 1e-6 * (1.0 + z.norm()));
            }
        }
    }
}
