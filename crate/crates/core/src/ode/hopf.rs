use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{find_steady_states, integrate_ode, OdeState, Stability};
use crate::error::{Error, Result};
use crate::model::{ModelParams, RateFunction, RateSpec};

/// Thresholds in the constant aging rate for the sigmoid turning rate.
///
/// The isotropic state is stable iff `γ < γ̂` and `γ ∉ [γ*, γ**]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfThresholds {
    pub gamma_star: f64,
    pub gamma_hat: f64,
    pub gamma_star2: f64,
    /// `α > 4λ₊/λ₋`, so `λ′(1) < 2λ(1)` never rescues stability.
    pub alpha_condition: bool,
    /// `λ̄ < (2 + √3) λ̲`, so `τ > 0` is also necessary for anisotropic states.
    pub uniqueness_condition: bool,
    /// γ is constant in the supplied model.
    pub gamma_constant: bool,
    /// All preconditions hold.
    pub applicable: bool,
}

impl HopfThresholds {
    /// Stability of the isotropic state predicted for a constant γ.
    pub fn isotropic_stable(&self, gamma: f64) -> bool {
        gamma < self.gamma_hat && !(self.gamma_star..=self.gamma_star2).contains(&gamma)
    }
}

/// Thresholds from the closed-form expressions in `λ± = (λ̄ ± λ̲)/2` and α.
///
/// Requires `λ` to be a `SigmoidExp` centered at 1. A non-constant γ or a
/// violated inequality is reported through the flags, not as an error.
pub fn hopf_thresholds(m: &ModelParams) -> Result<HopfThresholds> {
    let (lo, hi, alpha) = match *m.lambda.spec() {
        RateSpec::SigmoidExp {
            lam_lo,
            lam_hi,
            alpha,
            center: 1.0,
        } => (lam_lo, lam_hi, alpha),
        _ => {
            return Err(Error::Parameter(
                "Hopf thresholds need a sigmoid_exp turning rate centered at 1".into(),
            ))
        }
    };
    let lp = 0.5 * (hi + lo);
    let lm = 0.5 * (hi - lo);
    let al = alpha * lm;
    let disc = al * (al - 4.0 * lp);
    let root = disc.max(0.0).sqrt();
    let alpha_condition = lm > 0.0 && alpha > 4.0 * lp / lm;
    let uniqueness_condition = hi < (2.0 + 3f64.sqrt()) * lo;
    let gamma_constant = matches!(m.gamma.spec(), RateSpec::Constant { .. });
    Ok(HopfThresholds {
        gamma_star: 0.5 * (al - 2.0 * lp - root),
        gamma_hat: 2.0 * lp * lp / (al - 2.0 * lp),
        gamma_star2: 0.5 * (al - 2.0 * lp + root),
        alpha_condition,
        uniqueness_condition,
        gamma_constant,
        applicable: alpha_condition && uniqueness_condition && gamma_constant,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub gamma_from: f64,
    pub gamma_to: f64,
    pub steps: usize,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Initial offset in `d` from the isotropic state.
    #[serde(default = "default_perturbation")]
    pub perturbation: f64,
}

fn default_t_end() -> f64 {
    150.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_perturbation() -> f64 {
    1e-2
}

impl SweepOptions {
    pub fn new(gamma_from: f64, gamma_to: f64, steps: usize) -> Self {
        Self {
            gamma_from,
            gamma_to,
            steps,
            t_end: default_t_end(),
            dt: default_dt(),
            perturbation: default_perturbation(),
        }
    }

    pub fn gammas(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.gamma_from];
        }
        let h = (self.gamma_to - self.gamma_from) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.gamma_from + h * i as f64).collect()
    }
}

/// One γ value of a bifurcation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub d_fixed_points: Vec<f64>,
    pub stability: Vec<Stability>,
    /// Range of `d` on the attracting cycle reached from a perturbed isotropic start.
    pub cycle_min_d: Option<f64>,
    pub cycle_max_d: Option<f64>,
}

/// Bifurcation data over a range of constant aging rates, one task per γ.
pub fn hopf_sweep(m: &ModelParams, opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    if opts.steps == 0 {
        return Err(Error::Parameter("sweep needs at least one step".into()));
    }
    if !(opts.gamma_from > 0.0 && opts.gamma_to > 0.0) {
        return Err(Error::Parameter("γ range must be positive".into()));
    }
    opts.gammas()
        .into_par_iter()
        .map(|gamma| {
            let mut mg = m.clone();
            mg.gamma = RateFunction::constant(gamma)?;
            let states = find_steady_states(&mg);
            let iso = OdeState::isotropic(&mg);
            let start = OdeState::new(opts.perturbation, iso.u1, iso.v1);
            let tr = integrate_ode(start, &mg, opts.t_end, opts.dt)?;
            let cycle = tr.limit.is_cycle;
            Ok(SweepRow {
                gamma,
                d_fixed_points: states.iter().map(|s| s.d_bar).collect(),
                stability: states.iter().map(|s| s.stable).collect(),
                cycle_min_d: cycle.then_some(tr.limit.tail_min_d),
                cycle_max_d: cycle.then_some(tr.limit.tail_max_d),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::isotropic_eigenvalues;

    fn model(gamma: f64) -> ModelParams {
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

    #[test]
    fn figure_thresholds() {
        let h = hopf_thresholds(&model(1.0)).unwrap();
        assert!((h.gamma_star - 1.815).abs() < 1e-3);
        assert!((h.gamma_hat - 3.243).abs() < 1e-3);
        assert!((h.gamma_star2 - 15.185).abs() < 1e-3);
        assert!(h.alpha_condition && h.uniqueness_condition && h.gamma_constant && h.applicable);
        assert!(h.gamma_star < h.gamma_hat && h.gamma_hat < h.gamma_star2);
    }

    #[test]
    fn flags_violated_preconditions() {
        let m = ModelParams::new(
            RateFunction::new(RateSpec::SigmoidExp {
                lam_lo: 1.0,
                lam_hi: 8.0,
                alpha: 3.0,
                center: 1.0,
            })
            .unwrap(),
            RateFunction::new(RateSpec::Linear { a: 1.0, b: 1.0 }).unwrap(),
        );
        let h = hopf_thresholds(&m).unwrap();
        assert!(!h.alpha_condition && !h.uniqueness_condition && !h.gamma_constant && !h.applicable);
        let lin = ModelParams::new(
            RateFunction::constant(1.0).unwrap(),
            RateFunction::constant(1.0).unwrap(),
        );
        assert!(hopf_thresholds(&lin).is_err());
    }

    #[test]
    fn complex_pair_crosses_at_gamma_star() {
        let h = hopf_thresholds(&model(1.0)).unwrap();
        let lead = |g: f64| {
            isotropic_eigenvalues(&model(g))[1..]
                .iter()
                .map(|z| z.re)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        assert!(lead(h.gamma_star - 1e-3) < 0.0);
        assert!(lead(h.gamma_star + 1e-3) > 0.0);
        let im = isotropic_eigenvalues(&model(h.gamma_star))[1].im;
        assert!(im.abs() > 0.1);
    }

    #[test]
    fn threshold_prediction_matches_eigenvalues() {
        let h = hopf_thresholds(&model(1.0)).unwrap();
        for i in 1..200 {
            let g = 0.1 * i as f64;
            if [h.gamma_star, h.gamma_hat, h.gamma_star2].iter().any(|t| (t - g).abs() < 1e-6) {
                continue;
            }
            let mr = isotropic_eigenvalues(&model(g))
                .iter()
                .map(|z| z.re)
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(mr < 0.0, h.isotropic_stable(g), "γ = {g}");
        }
    }

    #[test]
    fn sweep_marks_cycle_region() {
        let mut opts = SweepOptions::new(1.5, 2.5, 2);
        opts.t_end = 100.0;
        let rows = hopf_sweep(&model(1.0), &opts).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].cycle_min_d.is_none());
        assert_eq!(rows[0].stability[0], Stability::Stable);
        assert!(rows[1].cycle_max_d.unwrap() > 1e-3);
        assert_eq!(rows[1].stability[0], Stability::Unstable);
    }
}
