use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DerivedCurves, ModelParams};

pub const DEFAULT_RHO_SCAN: f64 = 5.0;
pub const BRANCH_GRID: usize = 4096;
const FOLD_TOL: f64 = 1e-13;
const INVERSE_TOL: f64 = 1e-14;

/// A maximal interval on which Λ is monotone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub lo: f64,
    pub hi: f64,
    pub increasing: bool,
}

impl Branch {
    pub fn contains(&self, rho: f64) -> bool {
        rho >= self.lo && rho <= self.hi
    }
}

/// Monotone pieces of Λ on `(0, rho_scan]`, located by sign changes of Λ′
/// on a uniform grid and refined by bisection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchMap {
    pub rho_scan: f64,
    pub branches: Vec<Branch>,
}

/// Local extremum of Λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub rho: f64,
    pub maximum: bool,
}

fn rising(c: &DerivedCurves, rho: f64) -> bool {
    c.ratio_prime_at(rho) > 0.0
}

impl BranchMap {
    pub fn new(m: &ModelParams, rho_scan: f64) -> Result<Self> {
        Self::on_interval(m, 0.0, rho_scan)
    }

    /// Branches restricted to `[rho_min, rho_max]`.
    pub fn on_interval(m: &ModelParams, rho_min: f64, rho_max: f64) -> Result<Self> {
        if !(rho_min >= 0.0 && rho_max > rho_min) {
            return Err(Error::Parameter(format!(
                "search interval [{rho_min}, {rho_max}] is empty"
            )));
        }
        let c = DerivedCurves::new(m);
        let h = (rho_max - rho_min) / BRANCH_GRID as f64;
        let grid = |i: usize| rho_min + h * i as f64;
        let mut branches = Vec::new();
        let mut start = rho_min;
        let mut state = rising(&c, grid(1));
        for i in 2..=BRANCH_GRID {
            let now = rising(&c, grid(i));
            if now != state {
                let (mut a, mut b) = (grid(i - 1), grid(i));
                while b - a > FOLD_TOL {
                    let mid = 0.5 * (a + b);
                    if rising(&c, mid) == state {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                let fold = 0.5 * (a + b);
                branches.push(Branch {
                    lo: start,
                    hi: fold,
                    increasing: state,
                });
                start = fold;
                state = now;
            }
        }
        branches.push(Branch {
            lo: start,
            hi: rho_max,
            increasing: state,
        });
        Ok(Self {
            rho_scan: rho_max,
            branches,
        })
    }

    pub fn increasing(&self) -> Vec<Branch> {
        self.branches.iter().copied().filter(|b| b.increasing).collect()
    }

    pub fn folds(&self) -> Vec<Fold> {
        self.branches
            .windows(2)
            .map(|w| Fold {
                rho: w[0].hi,
                maximum: w[0].increasing,
            })
            .collect()
    }

    /// Whether Λ changes monotonicity at all on the scanned range.
    pub fn is_monotone(&self) -> bool {
        self.branches.len() == 1
    }

    /// Index into [`Self::increasing`] of the branch containing `rho`.
    pub fn increasing_index(&self, rho: f64) -> Option<usize> {
        self.increasing().iter().position(|b| b.contains(rho))
    }
}

fn lambda_value(c: &DerivedCurves, rho: f64) -> f64 {
    if rho <= 0.0 {
        0.0
    } else {
        c.ratio_at(rho)
    }
}

/// Point on `branch` where Λ equals `level`, if any.
pub fn invert_on_branch(m: &ModelParams, branch: &Branch, level: f64) -> Option<f64> {
    let c = DerivedCurves::new(m);
    let (la, lb) = (lambda_value(&c, branch.lo), lambda_value(&c, branch.hi));
    let (lmin, lmax) = if la <= lb { (la, lb) } else { (lb, la) };
    if level < lmin || level > lmax {
        return None;
    }
    let (mut a, mut b) = (branch.lo, branch.hi);
    while b - a > INVERSE_TOL * b.max(1.0) {
        let mid = 0.5 * (a + b);
        let below = lambda_value(&c, mid) < level;
        if below == branch.increasing {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

/// Admissible points other than `rho` sharing its value of Λ.
pub fn reachability_set(m: &ModelParams, rho: f64, map: &BranchMap) -> Vec<f64> {
    let c = DerivedCurves::new(m);
    let level = lambda_value(&c, rho);
    map.increasing()
        .iter()
        .filter(|b| !b.contains(rho))
        .filter_map(|b| invert_on_branch(m, b, level))
        .filter(|&x| (x - rho).abs() > 1e-9 && c.is_admissible(x))
        .collect()
}

/// Landing point of a jump from `p` on increasing branch `current_branch`:
/// the Λ-matched admissible density on another increasing branch where the
/// sign of `Λ/r − Γ` (the sign of `B′`) is opposite. The nearest such
/// branch is chosen.
pub fn jump_partner(p: f64, r: f64, current_branch: usize, m: &ModelParams) -> Result<f64> {
    let map = BranchMap::new(m, DEFAULT_RHO_SCAN.max(2.0 * p))?;
    jump_partner_in(p, r, current_branch, m, &map)
}

pub fn jump_partner_in(p: f64, r: f64, current_branch: usize, m: &ModelParams, map: &BranchMap) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("r must be positive, got {r}")));
    }
    let inc = map.increasing();
    let here = inc.get(current_branch).ok_or_else(|| {
        Error::Parameter(format!("no increasing branch with index {current_branch}"))
    })?;
    if !here.contains(p) {
        return Err(Error::Parameter(format!(
            "P = {p} is not on branch {current_branch} [{}, {}]",
            here.lo, here.hi
        )));
    }
    let c = DerivedCurves::new(m);
    let level = lambda_value(&c, p);
    let side = |x: f64| level / r - c.fraction(x);
    let s0 = side(p);
    let mut best: Option<(usize, f64)> = None;
    for (j, b) in inc.iter().enumerate() {
        if j == current_branch {
            continue;
        }
        if let Some(x) = invert_on_branch(m, b, level) {
            if side(x) * s0 < 0.0 && c.is_admissible(x) {
                let dist = (j as i64 - current_branch as i64).unsigned_abs() as usize;
                if best.is_none_or(|(d, _)| dist < d) {
                    best = Some((dist, x));
                }
            }
        }
    }
    best.map(|(_, x)| x)
        .ok_or_else(|| Error::NoResult(format!("P = {p} has no reachable jump partner")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RateFunction, RateSpec};

    fn with_lambda(spec: RateSpec) -> ModelParams {
        ModelParams::new(RateFunction::new(spec).unwrap(), RateFunction::constant(1.0).unwrap())
    }

    #[test]
    fn linear_rate_has_single_branch_and_no_partners() {
        let m = with_lambda(RateSpec::Linear { a: 1.0, b: 2.0 });
        let map = BranchMap::new(&m, 5.0).unwrap();
        assert!(map.is_monotone());
        assert!(map.branches[0].increasing);
        for p in [0.1, 0.5, 1.0, 3.0] {
            assert!(reachability_set(&m, p, &map).is_empty());
            assert!(matches!(jump_partner(p, 1.0, 0, &m), Err(Error::NoResult(_))));
        }
    }

    #[test]
    fn piecewise_step_folds_at_ramp_ends() {
        let eps = 0.1;
        let m = with_lambda(RateSpec::PiecewiseLinearStep {
            lam_lo: 1.0,
            lam_hi: 4.0,
            eps,
            center: 1.0,
        });
        let map = BranchMap::new(&m, 5.0).unwrap();
        let folds = map.folds();
        assert_eq!(folds.len(), 2);
        assert!((folds[0].rho - (1.0 - eps)).abs() < 1e-10 && folds[0].maximum);
        assert!((folds[1].rho - (1.0 + eps)).abs() < 1e-10 && !folds[1].maximum);
    }

    #[test]
    fn piecewise_jump_ratio() {
        let m = ModelParams::new(
            RateFunction::new(RateSpec::PiecewiseLinearStep {
                lam_lo: 1.0,
                lam_hi: 4.0,
                eps: 0.1,
                center: 1.0,
            })
            .unwrap(),
            RateFunction::constant(1.0).unwrap(),
        );
        // crest value on the upper branch, r inside the admissible range
        let r = 1.2;
        let p = 2.0;
        let q = jump_partner(p, r, 1, &m).unwrap();
        assert!((q - p * 1.0 / 4.0).abs() < 1e-10);
        let back = jump_partner(q, r, 0, &m).unwrap();
        assert!((back - p).abs() < 1e-10);
    }

    #[test]
    fn sigmoid_partner_is_mirror() {
        let m = with_lambda(RateSpec::SigmoidExp {
            lam_lo: 2.5,
            lam_hi: 8.0,
            alpha: 10.0,
            center: 1.0,
        });
        let map = BranchMap::new(&m, 5.0).unwrap();
        let w = 0.47;
        let partners = reachability_set(&m, w, &map);
        assert_eq!(partners.len(), 1);
        // exact mirror only at the anti-symmetric pair; nearby it stays close
        assert!((partners[0] - (2.0 - w)).abs() < 0.1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = with_lambda(RateSpec::Constant { value: 1.0 });
        assert!(BranchMap::new(&m, 0.0).is_err());
        assert!(jump_partner(0.5, -1.0, 0, &m).is_err());
        assert!(jump_partner(0.5, 1.0, 3, &m).is_err());
    }
}
