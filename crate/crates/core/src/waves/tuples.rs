use serde::{Deserialize, Serialize};

use super::branches::{invert_on_branch, BranchMap};
use crate::error::{Error, Result};
use crate::model::{DerivedCurves, ModelParams};

const PAIR_SCAN: usize = 1024;
const PAIR_TOL: f64 = 1e-12;
const CHAIN_TOL: f64 = 1e-8;
const LEVEL_TOL: f64 = 1e-8;

pub const ORBIT_OFFSET: f64 = 1e-5;
pub const ORBIT_STEP: f64 = 1e-3;
pub const ORBIT_MAX_TIME: f64 = 200.0;
pub const ORBIT_TARGET_BALL: f64 = 1e-4;
const ORBIT_SAMPLE_EVERY: usize = 10;

/// Plateau values sharing one value of Λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveTuple {
    /// Common value `wᵢ/λ(wᵢ)`.
    pub r: f64,
    /// Increasing.
    pub values: Vec<f64>,
    /// `Λ′(wᵢ) > 0` for each value.
    pub linear_stable: Vec<bool>,
    /// Equal Ω and a heteroclinic connection from the first value to every other.
    pub selected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitOutcome {
    /// Entered the target ball around `(w₂, 0)`.
    Reached,
    /// Turned around and came back to the start.
    Returned,
    /// Left `[0, 10·max(w₁, w₂)]`.
    Escaped,
    TimedOut,
}

/// Shooting orbit of the fast system `Q″ = −(λ(Q)w₁ − λ(w₁)Q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseOrbit {
    /// `(Q, Q′)` samples.
    pub samples: Vec<(f64, f64)>,
    pub w_start: f64,
    pub w_target: f64,
    pub is_heteroclinic: bool,
    pub outcome: OrbitOutcome,
    /// Largest deviation of the first integral along the orbit.
    pub energy_residual: f64,
    pub energy: f64,
    pub closest_approach: f64,
}

/// First integral `w₁∫₀^Q λ − λ(w₁)Q²/2 + Q′²/2` of the fast system.
pub fn orbit_energy(m: &ModelParams, w1: f64, q: f64, dq: f64) -> f64 {
    w1 * m.lambda.integral(q) - m.lambda.value(w1) * q * q / 2.0 + dq * dq / 2.0
}

/// Integrates the fast system out of the saddle at `w₁` along its unstable
/// direction towards `w₂` and reports whether it lands on `(w₂, 0)`.
pub fn heteroclinic_check(m: &ModelParams, w1: f64, w2: f64) -> Result<PhaseOrbit> {
    let c = DerivedCurves::new(m);
    if !(w1 > 0.0 && w2 > 0.0) || w1 == w2 {
        return Err(Error::Parameter(format!("need distinct positive values, got ({w1}, {w2})")));
    }
    let (l1, l2) = (c.ratio_at(w1), c.ratio_at(w2));
    if (l1 - l2).abs() > LEVEL_TOL * l1.max(l2) {
        return Err(Error::Parameter(format!(
            "values ({w1}, {w2}) do not share Λ: {l1} vs {l2}"
        )));
    }
    let (lam1, dlam1) = m.lambda.eval(w1);
    let kappa2 = lam1 - dlam1 * w1;
    if !(kappa2 > 0.0) {
        return Err(Error::Parameter(format!("w₁ = {w1} is not admissible, no unstable direction")));
    }
    let kappa = kappa2.sqrt();
    let dir = (w2 - w1).signum();
    let accel = |q: f64| -(m.lambda.value(q) * w1 - lam1 * q);
    let (mut q, mut v) = (w1 + dir * ORBIT_OFFSET, dir * kappa * ORBIT_OFFSET);
    let e0 = orbit_energy(m, w1, q, v);
    let upper = 10.0 * w1.max(w2);
    let h = ORBIT_STEP;
    let steps = (ORBIT_MAX_TIME / h).round() as usize;
    let gap = (w2 - w1).abs();

    let mut samples = vec![(q, v)];
    let mut residual = 0.0_f64;
    let mut closest = f64::INFINITY;
    let mut outcome = OrbitOutcome::TimedOut;
    for i in 1..=steps {
        let (k1q, k1v) = (v, accel(q));
        let (k2q, k2v) = (v + 0.5 * h * k1v, accel(q + 0.5 * h * k1q));
        let (k3q, k3v) = (v + 0.5 * h * k2v, accel(q + 0.5 * h * k2q));
        let (k4q, k4v) = (v + h * k3v, accel(q + h * k3q));
        q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if i % ORBIT_SAMPLE_EVERY == 0 {
            samples.push((q, v));
        }
        if !(q.is_finite() && v.is_finite()) || q < 0.0 || q > upper {
            outcome = OrbitOutcome::Escaped;
            break;
        }
        residual = residual.max((orbit_energy(m, w1, q, v) - e0).abs());
        let dist = (q - w2).hypot(v);
        closest = closest.min(dist);
        if dist < ORBIT_TARGET_BALL {
            outcome = OrbitOutcome::Reached;
            break;
        }
        if v * dir < 0.0 && (q - w1) * dir < 1e-3 * gap {
            outcome = OrbitOutcome::Returned;
            break;
        }
    }
    samples.push((q, v));
    Ok(PhaseOrbit {
        samples,
        w_start: w1,
        w_target: w2,
        is_heteroclinic: outcome == OrbitOutcome::Reached,
        outcome,
        energy_residual: residual,
        energy: e0,
        closest_approach: closest,
    })
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut fa: f64, mut b: f64, tol: f64) -> f64 {
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Pairs `w₁ < w₂` on distinct increasing branches of Λ with equal Λ and Ω.
pub fn stable_pairs(m: &ModelParams, search_box: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let (rho_min, rho_max) = search_box;
    if !(rho_min > 0.0) {
        return Err(Error::Parameter(format!("rho_min must be positive, got {rho_min}")));
    }
    let map = BranchMap::on_interval(m, rho_min, rho_max)?;
    let c = DerivedCurves::new(m);
    let inc = map.increasing();
    let mut pairs = Vec::new();
    for i in 0..inc.len() {
        for j in i + 1..inc.len() {
            let (bi, bj) = (inc[i], inc[j]);
            let lo = c.ratio_at(bi.lo).max(c.ratio_at(bj.lo));
            let hi = c.ratio_at(bi.hi).min(c.ratio_at(bj.hi));
            if !(hi > lo) {
                continue;
            }
            let (Some(a), Some(b)) = (invert_on_branch(m, &bi, lo), invert_on_branch(m, &bi, hi)) else {
                continue;
            };
            let diff = |w: f64| -> f64 {
                match invert_on_branch(m, &bj, c.ratio_at(w)) {
                    Some(w2) => c.omega(w) - c.omega(w2),
                    None => f64::NAN,
                }
            };
            let step = (b - a) / PAIR_SCAN as f64;
            let mut prev: Option<(f64, f64)> = None;
            for k in 0..=PAIR_SCAN {
                let w = a + step * k as f64;
                let h = diff(w);
                if !h.is_finite() {
                    prev = None;
                    continue;
                }
                if let Some((pw, ph)) = prev {
                    let root = if h == 0.0 {
                        Some(w)
                    } else if ph * h < 0.0 {
                        Some(bisect(&diff, pw, ph, w, PAIR_TOL))
                    } else {
                        None
                    };
                    if let Some(w1) = root {
                        if let Some(w2) = invert_on_branch(m, &bj, c.ratio_at(w1)) {
                            if !pairs.iter().any(|&(x, _): &(f64, f64)| (x - w1).abs() < CHAIN_TOL) {
                                pairs.push((w1, w2));
                            }
                        }
                    }
                }
                prev = Some((w, h));
            }
        }
    }
    Ok(pairs)
}

/// Tuples satisfying conditions A, B and C, with the selection flag set by
/// the heteroclinic check. Pairs sharing a value are chained into longer
/// tuples; Ω is compared pairwise against the smallest value.
pub fn find_stable_tuples(m: &ModelParams, search_box: (f64, f64)) -> Result<Vec<WaveTuple>> {
    let pairs = stable_pairs(m, search_box)?;
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for (a, b) in pairs {
        let hit = groups
            .iter()
            .position(|g| g.iter().any(|&x| (x - a).abs() < CHAIN_TOL || (x - b).abs() < CHAIN_TOL));
        match hit {
            Some(i) => {
                for x in [a, b] {
                    if !groups[i].iter().any(|&y| (y - x).abs() < CHAIN_TOL) {
                        groups[i].push(x);
                    }
                }
            }
            None => groups.push(vec![a, b]),
        }
    }
    let c = DerivedCurves::new(m);
    let mut out = Vec::with_capacity(groups.len());
    for mut values in groups {
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let w1 = values[0];
        let mut selected = true;
        for &w in &values[1..] {
            selected &= heteroclinic_check(m, w1, w)?.is_heteroclinic;
        }
        out.push(WaveTuple {
            r: c.ratio_at(w1),
            linear_stable: values.iter().map(|&w| c.is_admissible(w)).collect(),
            values,
            selected,
        });
    }
    out.sort_by(|a, b| a.values[0].partial_cmp(&b.values[0]).unwrap());
    Ok(out)
}

/// A pair sharing the value of Λ, with the admissibility of each member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub w1: f64,
    pub w2: f64,
    pub admissible1: bool,
    pub admissible2: bool,
}

/// For each of `samples` grid points in `(0, rho_max]`, every larger density
/// with the same Λ (condition A only), on any monotone branch.
pub fn lambda_matched_pairs(m: &ModelParams, rho_max: f64, samples: usize) -> Result<Vec<MatchedPair>> {
    let map = BranchMap::new(m, rho_max)?;
    let c = DerivedCurves::new(m);
    let mut out = Vec::new();
    for i in 1..=samples {
        let w = rho_max * i as f64 / samples as f64;
        let level = c.ratio_at(w);
        for b in &map.branches {
            if b.hi <= w {
                continue;
            }
            if let Some(x) = invert_on_branch(m, b, level) {
                if x > w + 1e-9 {
                    out.push(MatchedPair {
                        w1: w,
                        w2: x,
                        admissible1: c.is_admissible(w),
                        admissible2: c.is_admissible(x),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Largest violation of `λ(ρ̄+ρ) + λ(ρ̄−ρ) = 2λ(ρ̄)` on a grid over `[0, ρ̄]`.
pub fn antisymmetry_defect(m: &ModelParams, rho_bar: f64) -> f64 {
    let mid = m.lambda.value(rho_bar);
    (0..=1000)
        .map(|i| {
            let x = rho_bar * i as f64 / 1000.0;
            (m.lambda.value(rho_bar + x) + m.lambda.value(rho_bar - x) - 2.0 * mid).abs()
        })
        .fold(0.0, f64::max)
}

/// Pair `(w₁, 2ρ̄ − w₁)` for a turning rate anti-symmetric about `ρ̄`, with
/// `w₁` the admissible solution of `Λ(w₁) = Λ(ρ̄)` in `(0, ρ̄)` nearest to
/// `w1_guess`.
pub fn antisymmetric_pair(m: &ModelParams, rho_bar: f64, w1_guess: f64) -> Result<WaveTuple> {
    if !(rho_bar > 0.0) {
        return Err(Error::Parameter(format!("ρ̄ must be positive, got {rho_bar}")));
    }
    let defect = antisymmetry_defect(m, rho_bar);
    if defect > 1e-9 * m.lambda.value(rho_bar).max(1.0) {
        return Err(Error::Parameter(format!(
            "turning rate is not anti-symmetric about {rho_bar} (defect {defect:.3e})"
        )));
    }
    let c = DerivedCurves::new(m);
    let target = c.ratio_at(rho_bar);
    let f = |w: f64| c.ratio_at(w) - target;
    let n = 4096;
    let mut roots = Vec::new();
    let mut prev = (rho_bar / n as f64, f(rho_bar / n as f64));
    for i in 2..n {
        let w = rho_bar * i as f64 / n as f64;
        let fw = f(w);
        if prev.1 * fw < 0.0 {
            let root = bisect(&f, prev.0, prev.1, w, PAIR_TOL);
            if (root - rho_bar).abs() > 1e-6 && c.is_admissible(root) {
                roots.push(root);
            }
        }
        prev = (w, fw);
    }
    let w1 = roots
        .into_iter()
        .min_by(|a, b| (a - w1_guess).abs().partial_cmp(&(b - w1_guess).abs()).unwrap())
        .ok_or_else(|| Error::NoResult(format!("no admissible value below {rho_bar} matches Λ(ρ̄)")))?;
    let w2 = 2.0 * rho_bar - w1;
    let orbit = heteroclinic_check(m, w1, w2)?;
    Ok(WaveTuple {
        r: c.ratio_at(w1),
        values: vec![w1, w2],
        linear_stable: vec![c.is_admissible(w1), c.is_admissible(w2)],
        selected: orbit.is_heteroclinic,
    })
}
