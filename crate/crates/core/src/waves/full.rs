use serde::{Deserialize, Serialize};

use super::branches::{invert_on_branch, reachability_set, Branch, BranchMap, DEFAULT_RHO_SCAN};
use crate::error::{Error, Result};
use crate::model::{DerivedCurves, ModelParams, RateSpec};
use crate::quadrature::adaptive_simpson;

const SINGULAR_TOL: f64 = 1e-12;
const FOLD_CUTOFF: f64 = 1e-8;
const SHOOT_STEP: f64 = 2e-4;
const SHOOT_SCAN: usize = 200;
const R_SCAN: usize = 400;
const MASS_TOL: f64 = 1e-12;
const WINDOW_LEVELS: usize = 512;
const WINDOW_SHRINK: f64 = 0.1;
const PROFILE_POINTS: usize = 2000;

/// `P′ = λ[P(λ+γ) − λγr] / (2(λ − Pλ′))` on an admissible branch.
pub fn full_rhs_p(p: f64, r: f64, m: &ModelParams) -> Result<f64> {
    let (l, dl) = m.lambda.eval(p);
    let denom = l - p * dl;
    if denom.abs() < SINGULAR_TOL {
        return Err(Error::Numeric(format!(
            "P = {p} sits on a fold of Λ (λ − Pλ′ = {denom:.3e})"
        )));
    }
    Ok(rhs_unchecked(p, r, m))
}

fn rhs_unchecked(p: f64, r: f64, m: &ModelParams) -> f64 {
    let (l, dl) = m.lambda.eval(p);
    let g = m.gamma.value(p);
    l * (p * (l + g) - l * g * r) / (2.0 * (l - p * dl))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveBounds {
    pub p_lo: f64,
    pub p_hi: f64,
    pub b_lo: f64,
    pub b_hi: f64,
}

/// Bounds on `P` from the reachable folds of Λ and on `B` from the range of Γ.
pub fn wave_bounds(m: &ModelParams) -> Result<WaveBounds> {
    wave_bounds_on(m, DEFAULT_RHO_SCAN)
}

pub fn wave_bounds_on(m: &ModelParams, rho_scan: f64) -> Result<WaveBounds> {
    let map = BranchMap::new(m, rho_scan)?;
    if map.is_monotone() {
        return Err(Error::NoResult("Λ is monotone, no waves can form".into()));
    }
    let mut p_hi = f64::NEG_INFINITY;
    let mut p_lo = f64::INFINITY;
    for fold in map.folds() {
        let reach = reachability_set(m, fold.rho, &map);
        if reach.is_empty() {
            continue;
        }
        let all = reach.iter().copied().chain(std::iter::once(fold.rho));
        if fold.maximum {
            p_hi = all.fold(p_hi, f64::max);
        } else {
            p_lo = all.fold(p_lo, f64::min);
        }
    }
    if !(p_hi.is_finite() && p_lo.is_finite()) {
        return Err(Error::NoResult("no reachable extremum of Λ".into()));
    }
    let c = DerivedCurves::new(m);
    let mut kinks: Vec<f64> = m.lambda.kinks();
    kinks.extend(m.gamma.kinks());
    let (b_lo, b_hi) = (0..=4096)
        .map(|i| rho_scan * i as f64 / 4096.0)
        .chain(kinks.into_iter().filter(|&k| k > 0.0 && k < rho_scan))
        .map(|x| c.fraction(x))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| (lo.min(g), hi.max(g)));
    Ok(WaveBounds { p_lo, p_hi, b_lo, b_hi })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstructionPath {
    /// Exponential crest and trough for a piecewise-linear turning rate.
    ClosedForm,
    /// Numerical shooting with prescribed switch points.
    Shooting,
    /// Window construction without prescribed switch points.
    Generic,
    /// Piecewise-constant `P` with constant `B`.
    Degenerate,
}

/// Smooth piece of `P` on one increasing branch of Λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSegment {
    pub xi: Vec<f64>,
    pub p: Vec<f64>,
    /// Index among the increasing branches of Λ.
    pub branch: usize,
}

impl WaveSegment {
    pub fn start(&self) -> f64 {
        self.xi[0]
    }
    pub fn end(&self) -> f64 {
        *self.xi.last().unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpPoint {
    pub xi: f64,
    pub p_left: f64,
    pub p_right: f64,
}

/// Crest/trough parameters of the closed-form wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepShape {
    pub lam_lo: f64,
    pub lam_hi: f64,
    pub gamma: f64,
    pub r: f64,
    pub crest_start: f64,
    pub xi1: f64,
    pub xi2: f64,
}

impl StepShape {
    fn crest_fixed(&self) -> f64 {
        self.r * self.gamma * self.lam_hi / (self.gamma + self.lam_hi)
    }
    fn trough_fixed(&self) -> f64 {
        self.r * self.gamma * self.lam_lo / (self.gamma + self.lam_lo)
    }
    fn crest_rate(&self) -> f64 {
        0.5 * (self.gamma + self.lam_hi)
    }
    fn trough_rate(&self) -> f64 {
        0.5 * (self.gamma + self.lam_lo)
    }

    pub fn crest(&self, xi: f64) -> f64 {
        let s = self.crest_fixed();
        s + (self.crest_rate() * xi).exp() * (self.crest_start - s)
    }

    pub fn trough_start(&self) -> f64 {
        self.crest(self.xi1) * self.lam_lo / self.lam_hi
    }

    pub fn trough(&self, xi: f64) -> f64 {
        let s = self.trough_fixed();
        s + (self.trough_rate() * xi).exp() * (self.trough_start() - s)
    }

    /// `P` on `[0, ξ₂)`, extended periodically.
    pub fn eval(&self, xi: f64) -> f64 {
        let x = xi.rem_euclid(self.xi2);
        if x < self.xi1 {
            self.crest(x)
        } else {
            self.trough(x - self.xi1)
        }
    }

    /// Crest start that closes the loop, per unit `r`.
    fn periodic_start(lam_lo: f64, lam_hi: f64, gamma: f64, xi1: f64, xi2: f64, r: f64) -> f64 {
        let rho = lam_lo / lam_hi;
        let pc = r * gamma * lam_hi / (gamma + lam_hi);
        let pt = r * gamma * lam_lo / (gamma + lam_lo);
        let e1 = (0.5 * (gamma + lam_hi) * xi1).exp();
        let e2 = (0.5 * (gamma + lam_lo) * (xi2 - xi1)).exp();
        (pt * (1.0 - e2) + e2 * rho * pc * (1.0 - e1)) / (rho * (1.0 - e1 * e2))
    }

    pub fn mean(&self) -> f64 {
        let (a, b) = (self.crest_rate(), self.trough_rate());
        let (sc, st) = (self.crest_fixed(), self.trough_fixed());
        let e1 = (a * self.xi1).exp();
        let e2 = (b * (self.xi2 - self.xi1)).exp();
        let crest = sc * self.xi1 + (self.crest_start - sc) * (e1 - 1.0) / a;
        let trough = st * (self.xi2 - self.xi1) + (self.trough_start() - st) * (e2 - 1.0) / b;
        (crest + trough) / self.xi2
    }
}

/// Piecewise-smooth traveling profile `P(ξ)` with continuous fraction `B(ξ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleWave {
    pub r: f64,
    pub period: f64,
    pub segments: Vec<WaveSegment>,
    /// `(ξ, B)` samples.
    pub b_profile: Vec<(f64, f64)>,
    pub jump_points: Vec<JumpPoint>,
    /// Mean of `P` over one period.
    pub mass: f64,
    pub path: ConstructionPath,
    pub closed_form: Option<StepShape>,
    #[serde(skip)]
    model: Option<ModelParams>,
}

fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    if h <= 0.0 {
        return y0;
    }
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * d1
}

impl AdmissibleWave {
    /// `P(ξ)` extended periodically. At a jump the right limit is returned.
    pub fn eval(&self, xi: f64) -> f64 {
        if let Some(shape) = &self.closed_form {
            return shape.eval(xi);
        }
        let x = xi.rem_euclid(self.period);
        let seg = self
            .segments
            .iter()
            .rev()
            .find(|s| s.start() <= x)
            .unwrap_or(&self.segments[0]);
        let i = match seg.xi.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return seg.p[i],
            Err(i) => i.clamp(1, seg.xi.len() - 1),
        };
        let (x0, x1, p0, p1) = (seg.xi[i - 1], seg.xi[i], seg.p[i - 1], seg.p[i]);
        match (&self.model, self.path) {
            (Some(m), ConstructionPath::Shooting | ConstructionPath::Generic) => {
                hermite(x0, x1, p0, p1, rhs_unchecked(p0, self.r, m), rhs_unchecked(p1, self.r, m), x)
            }
            _ => p0 + (p1 - p0) * (x - x0) / (x1 - x0),
        }
    }

    /// Samples of `P` at `n` equispaced points of one period.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.eval(self.period * i as f64 / n as f64)).collect()
    }

    pub fn amplitude(&self) -> f64 {
        let (lo, hi) = self
            .segments
            .iter()
            .flat_map(|s| s.p.iter())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        hi - lo
    }
}

fn b_samples(segments: &[WaveSegment], r: f64, m: &ModelParams) -> Vec<(f64, f64)> {
    let c = DerivedCurves::new(m);
    segments
        .iter()
        .flat_map(|s| s.xi.iter().zip(s.p.iter()).map(|(&x, &p)| (x, c.ratio_at(p) / r)))
        .collect()
}

fn jumps_of(segments: &[WaveSegment], period: f64) -> Vec<JumpPoint> {
    let n = segments.len();
    (0..n)
        .map(|i| {
            let (a, b) = (&segments[i], &segments[(i + 1) % n]);
            JumpPoint {
                xi: if i + 1 == n { period } else { b.start() },
                p_left: *a.p.last().unwrap(),
                p_right: b.p[0],
            }
        })
        .collect()
}

/// Options for [`construct_admissible_wave`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveRequest {
    /// Mean of `P` over one period.
    pub target_mass: f64,
    /// Crest → trough and period end, for the switch-point paths.
    pub switch_points: Option<(f64, f64)>,
    /// Force the numerical path even when the closed form applies.
    pub force_numeric: bool,
}

impl WaveRequest {
    pub fn new(target_mass: f64, switch_points: Option<(f64, f64)>) -> Self {
        Self {
            target_mass,
            switch_points,
            force_numeric: false,
        }
    }
}

/// Piecewise-linear λ with constant γ: parameters of the closed form.
fn step_parameters(m: &ModelParams) -> Option<(f64, f64, f64, f64, f64)> {
    match (m.lambda.spec(), m.gamma.spec()) {
        (
            RateSpec::PiecewiseLinearStep {
                lam_lo,
                lam_hi,
                eps,
                center,
            },
            RateSpec::Constant { value },
        ) => Some((*lam_lo, *lam_hi, *eps, *center, *value)),
        _ => None,
    }
}

/// Builds an admissible counter-propagating wave with the requested mean.
///
/// With switch points and a piecewise-linear λ at constant γ the closed form
/// is used; other models with switch points go through shooting; without
/// switch points the generic window construction runs.
pub fn construct_admissible_wave(m: &ModelParams, req: &WaveRequest) -> Result<AdmissibleWave> {
    if !(req.target_mass > 0.0) {
        return Err(Error::Parameter(format!("target mass must be positive, got {}", req.target_mass)));
    }
    match req.switch_points {
        Some((xi1, xi2)) => {
            if !(xi1 > 0.0 && xi2 > xi1) {
                return Err(Error::Parameter(format!("need 0 < ξ₁ < ξ₂, got ({xi1}, {xi2})")));
            }
            if !req.force_numeric && step_parameters(m).is_some() {
                closed_form_wave(m, req.target_mass, xi1, xi2)
            } else {
                shooting_wave(m, req.target_mass, xi1, xi2)
            }
        }
        None => generic_wave(m, req.target_mass),
    }
}

fn step_instability_check(lam_lo: f64, lam_hi: f64, eps: f64) -> Result<()> {
    let limit = (lam_hi - lam_lo) / (lam_hi + lam_lo);
    if eps >= limit {
        return Err(Error::NoResult(format!(
            "ramp half-width {eps} is not below (λ̄−λ̲)/(λ̄+λ̲) = {limit}: Λ is monotone"
        )));
    }
    Ok(())
}

/// Closed-form crest/trough wave for a piecewise-linear λ and constant γ.
pub fn closed_form_wave(m: &ModelParams, target_mass: f64, xi1: f64, xi2: f64) -> Result<AdmissibleWave> {
    let (lam_lo, lam_hi, eps, center, gamma) = step_parameters(m)
        .ok_or_else(|| Error::Parameter("closed form needs piecewise_linear_step λ and constant γ".into()))?;
    step_instability_check(lam_lo, lam_hi, eps)?;
    let unit = StepShape {
        lam_lo,
        lam_hi,
        gamma,
        r: 1.0,
        crest_start: StepShape::periodic_start(lam_lo, lam_hi, gamma, xi1, xi2, 1.0),
        xi1,
        xi2,
    };
    // every quantity is linear in r
    let r = target_mass / unit.mean();
    let shape = StepShape {
        r,
        crest_start: unit.crest_start * r,
        ..unit
    };

    let crest_lo = shape.crest_start;
    let crest_hi = shape.crest(xi1);
    let trough_hi = shape.trough_start();
    let trough_lo = shape.trough(xi2 - xi1);
    let fits = crest_lo >= center + eps
        && crest_hi <= lam_hi / lam_lo * (center - eps)
        && trough_hi <= center - eps
        && trough_lo >= lam_lo / lam_hi * (center + eps)
        && crest_lo > shape.crest_fixed()
        && trough_hi < shape.trough_fixed();
    if !fits {
        return Err(Error::NoResult(format!(
            "switch points ({xi1}, {xi2}) with mass {target_mass} give crest [{crest_lo:.4}, {crest_hi:.4}] \
             and trough [{trough_lo:.4}, {trough_hi:.4}] outside the admissible plateaus"
        )));
    }

    let n1 = ((xi1 / SHOOT_STEP).ceil() as usize).max(2);
    let n2 = (((xi2 - xi1) / SHOOT_STEP).ceil() as usize).max(2);
    let crest = WaveSegment {
        xi: (0..=n1).map(|i| xi1 * i as f64 / n1 as f64).collect(),
        p: (0..=n1).map(|i| shape.crest(xi1 * i as f64 / n1 as f64)).collect(),
        branch: 1,
    };
    let trough = WaveSegment {
        xi: (0..=n2).map(|i| xi1 + (xi2 - xi1) * i as f64 / n2 as f64).collect(),
        p: (0..=n2).map(|i| shape.trough((xi2 - xi1) * i as f64 / n2 as f64)).collect(),
        branch: 0,
    };
    let segments = vec![crest, trough];
    Ok(AdmissibleWave {
        r,
        period: xi2,
        b_profile: b_samples(&segments, r, m),
        jump_points: jumps_of(&segments, xi2),
        mass: shape.mean(),
        path: ConstructionPath::ClosedForm,
        closed_form: Some(shape),
        segments,
        model: Some(m.clone()),
    })
}

/// The lowest pair of increasing branches of Λ with overlapping ranges.
/// Increasing branches of Λ sharing a range of values, ordered so that
/// pairs whose gap straddles `target` come first.
fn branch_pairs(m: &ModelParams, target: f64) -> Result<Vec<(Branch, Branch)>> {
    let map = BranchMap::new(m, DEFAULT_RHO_SCAN)?;
    let c = DerivedCurves::new(m);
    let inc = map.increasing();
    let mut pairs = Vec::new();
    for i in 0..inc.len() {
        for j in i + 1..inc.len() {
            let lo = c.ratio_at(inc[i].lo.max(1e-12)).max(c.ratio_at(inc[j].lo));
            let hi = c.ratio_at(inc[i].hi).min(c.ratio_at(inc[j].hi));
            if hi > lo {
                pairs.push((inc[i], inc[j]));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoResult("no two admissible branches of Λ share a value".into()));
    }
    let miss = |(a, b): &(Branch, Branch)| (a.hi - target).max(0.0) + (target - b.lo).max(0.0);
    pairs.sort_by(|x, y| miss(x).partial_cmp(&miss(y)).unwrap());
    Ok(pairs)
}

/// First successful construction over the branch pairs; the first error otherwise.
fn over_pairs<T>(m: &ModelParams, target: f64, build: impl Fn(&Branch, &Branch) -> Result<T>) -> Result<T> {
    let mut first = None;
    for (lower, upper) in branch_pairs(m, target)? {
        match build(&lower, &upper) {
            Ok(w) => return Ok(w),
            Err(e) => {
                first.get_or_insert(e);
            }
        }
    }
    Err(first.unwrap())
}

fn check_fold(p: f64, m: &ModelParams) -> Option<()> {
    let (l, dl) = m.lambda.eval(p);
    ((l - p * dl).abs() >= FOLD_CUTOFF).then_some(())
}

/// RK4 on `P′ = full_rhs_p` over `[0, length]`, staying on `branch`.
fn integrate_segment(p0: f64, r: f64, length: f64, branch: &Branch, m: &ModelParams) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = ((length / SHOOT_STEP).ceil() as usize).max(2);
    let h = length / n as f64;
    let mut xs = Vec::with_capacity(n + 1);
    let mut ps = Vec::with_capacity(n + 1);
    let mut p = p0;
    xs.push(0.0);
    ps.push(p);
    let f = |p: f64| -> Option<f64> {
        if !branch.contains(p) {
            return None;
        }
        check_fold(p, m)?;
        Some(rhs_unchecked(p, r, m))
    };
    for i in 1..=n {
        let k1 = f(p)?;
        let k2 = f(p + 0.5 * h * k1)?;
        let k3 = f(p + 0.5 * h * k2)?;
        let k4 = f(p + h * k3)?;
        p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !p.is_finite() || !branch.contains(p) {
            return None;
        }
        xs.push(h * i as f64);
        ps.push(p);
    }
    Some((xs, ps))
}

struct Shot {
    segments: Vec<WaveSegment>,
    mismatch: f64,
}

fn shoot(p0: f64, r: f64, xi1: f64, xi2: f64, lower: &Branch, upper: &Branch, m: &ModelParams) -> Option<Shot> {
    let c = DerivedCurves::new(m);
    let (x1, crest) = integrate_segment(p0, r, xi1, upper, m)?;
    let t0 = invert_on_branch(m, lower, c.ratio_at(*crest.last().unwrap()))?;
    let (x2, trough) = integrate_segment(t0, r, xi2 - xi1, lower, m)?;
    let back = invert_on_branch(m, upper, c.ratio_at(*trough.last().unwrap()))?;
    Some(Shot {
        mismatch: back - p0,
        segments: vec![
            WaveSegment {
                xi: x1,
                p: crest,
                branch: 1,
            },
            WaveSegment {
                xi: x2.into_iter().map(|x| x + xi1).collect(),
                p: trough,
                branch: 0,
            },
        ],
    })
}

fn segment_mean(segments: &[WaveSegment], period: f64) -> f64 {
    // composite Simpson on each uniform segment, trapezoid fallback for odd counts
    let mut total = 0.0;
    for s in segments {
        let n = s.xi.len() - 1;
        let h = (s.end() - s.start()) / n as f64;
        if n % 2 == 0 {
            let mut acc = s.p[0] + s.p[n];
            for i in 1..n {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * s.p[i];
            }
            total += acc * h / 3.0;
        } else {
            total += s.p.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum::<f64>();
        }
    }
    total / period
}

/// Periodic orbit for fixed `r` by bisection on the crest start.
fn periodic_shot(r: f64, xi1: f64, xi2: f64, lower: &Branch, upper: &Branch, m: &ModelParams) -> Option<Vec<WaveSegment>> {
    let c = DerivedCurves::new(m);
    let (a, b) = (upper.lo, upper.hi);
    let starts: Vec<f64> = (1..SHOOT_SCAN)
        .map(|i| a + (b - a) * i as f64 / SHOOT_SCAN as f64)
        .filter(|&p| c.ratio_at(p) / r > c.fraction(p))
        .collect();
    let mut prev: Option<(f64, f64)> = None;
    for &p in &starts {
        let Some(shot) = shoot(p, r, xi1, xi2, lower, upper, m) else {
            prev = None;
            continue;
        };
        if let Some((pa, fa)) = prev {
            if fa * shot.mismatch <= 0.0 {
                let (mut lo, mut flo, mut hi) = (pa, fa, p);
                let mut best = shot.segments;
                for _ in 0..200 {
                    if hi - lo < 1e-14 * hi {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    let s = shoot(mid, r, xi1, xi2, lower, upper, m)?;
                    if (s.mismatch > 0.0) == (flo > 0.0) {
                        lo = mid;
                        flo = s.mismatch;
                    } else {
                        hi = mid;
                    }
                    best = s.segments;
                }
                return Some(best);
            }
        }
        prev = Some((p, shot.mismatch));
    }
    None
}

fn r_range(lower: &Branch, upper: &Branch, m: &ModelParams) -> (f64, f64) {
    let c = DerivedCurves::new(m);
    let lo = c.ratio_at(lower.lo.max(1e-12)).max(c.ratio_at(upper.lo));
    let hi = c.ratio_at(lower.hi).min(c.ratio_at(upper.hi));
    let (mut gmin, mut gmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..=1000 {
        let x = lower.lo + (upper.hi - lower.lo) * i as f64 / 1000.0;
        let g = c.fraction(x.max(1e-12));
        gmin = gmin.min(g);
        gmax = gmax.max(g);
    }
    (lo / gmax, hi / gmin)
}

/// Calibrate `r` so that `mass_of(r)` equals `target`, by a log scan and bisection.
fn calibrate<T, F: Fn(f64) -> Option<(f64, T)>>(target: f64, range: (f64, f64), mass_of: F) -> Result<(f64, T)> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::NoResult("empty range for r".into()));
    }
    let ratio = (hi / lo).ln();
    let mut prev: Option<(f64, f64)> = None;
    let mut reached = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 1..R_SCAN {
        let r = lo * (ratio * i as f64 / R_SCAN as f64).exp();
        let Some((mass, _)) = mass_of(r) else {
            prev = None;
            continue;
        };
        reached = (reached.0.min(mass), reached.1.max(mass));
        if let Some((ra, ma)) = prev {
            if (ma - target) * (mass - target) <= 0.0 {
                let (mut a, mut fa, mut b) = (ra, ma - target, r);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    let Some((mm, _)) = mass_of(mid) else { break };
                    if ((mm - target) > 0.0) == (fa > 0.0) {
                        a = mid;
                        fa = mm - target;
                    } else {
                        b = mid;
                    }
                    if (mm - target).abs() < MASS_TOL * target || b - a < 1e-15 * b {
                        break;
                    }
                }
                let r = 0.5 * (a + b);
                return mass_of(r).map(|(_, t)| (r, t)).ok_or_else(|| {
                    Error::Numeric(format!("mass calibration lost the wave at r = {r}"))
                });
            }
        }
        prev = Some((r, mass));
    }
    Err(Error::NoResult(format!(
        "mass {target} not attainable; reachable range [{:.6}, {:.6}]",
        reached.0, reached.1
    )))
}

/// Shooting construction with prescribed switch points and mass calibration on `r`.
pub fn shooting_wave(m: &ModelParams, target_mass: f64, xi1: f64, xi2: f64) -> Result<AdmissibleWave> {
    if let Some((lo, hi, eps, _, _)) = step_parameters(m) {
        step_instability_check(lo, hi, eps)?;
    }
    over_pairs(m, target_mass, |lower, upper| {
        let range = r_range(lower, upper, m);
        let (r, segments) = calibrate(target_mass, range, |r| {
            let segs = periodic_shot(r, xi1, xi2, lower, upper, m)?;
            Some((segment_mean(&segs, xi2), segs))
        })?;
        Ok(AdmissibleWave {
            r,
            period: xi2,
            b_profile: b_samples(&segments, r, m),
            jump_points: jumps_of(&segments, xi2),
            mass: segment_mean(&segments, xi2),
            path: ConstructionPath::Shooting,
            closed_form: None,
            segments,
            model: Some(m.clone()),
        })
    })
}

/// Lower/upper branch points of the largest Λ-window where `B′ < 0` on the
/// lower branch and `B′ > 0` on the upper one.
fn feasible_window(r: f64, lower: &Branch, upper: &Branch, m: &ModelParams) -> Option<(f64, f64)> {
    let c = DerivedCurves::new(m);
    let lo = c.ratio_at(lower.lo.max(1e-12)).max(c.ratio_at(upper.lo));
    let hi = c.ratio_at(lower.hi).min(c.ratio_at(upper.hi));
    if !(hi > lo) {
        return None;
    }
    let ok = |level: f64| -> bool {
        let (Some(a), Some(b)) = (invert_on_branch(m, lower, level), invert_on_branch(m, upper, level)) else {
            return false;
        };
        level / r < c.fraction(a) && level / r > c.fraction(b)
    };
    let levels: Vec<f64> = (1..WINDOW_LEVELS)
        .map(|i| lo + (hi - lo) * i as f64 / WINDOW_LEVELS as f64)
        .collect();
    let mut best: Option<(usize, usize)> = None;
    let mut run_start: Option<usize> = None;
    for (i, &lv) in levels.iter().enumerate() {
        if ok(lv) {
            let s = *run_start.get_or_insert(i);
            if best.is_none_or(|(a, b)| i - s > b - a) {
                best = Some((s, i));
            }
        } else {
            run_start = None;
        }
    }
    let (a, b) = best?;
    if b <= a {
        return None;
    }
    let (la, lb) = (levels[a], levels[b]);
    let shrink = WINDOW_SHRINK * (lb - la);
    Some((la + shrink, lb - shrink))
}

fn segment_by_quadrature(p_from: f64, p_to: f64, xi0: f64, r: f64, branch: usize, m: &ModelParams) -> Option<(WaveSegment, f64)> {
    let n = PROFILE_POINTS;
    let ps: Vec<f64> = (0..=n).map(|i| p_from + (p_to - p_from) * i as f64 / n as f64).collect();
    let mut xi = Vec::with_capacity(n + 1);
    let mut area = 0.0;
    let mut t = xi0;
    xi.push(t);
    for w in ps.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dt = adaptive_simpson(|p| 1.0 / rhs_unchecked(p, r, m), a, b, 1e-13);
        let da = adaptive_simpson(|p| p / rhs_unchecked(p, r, m), a, b, 1e-13);
        if !(dt.is_finite() && dt > 0.0) {
            return None;
        }
        t += dt;
        area += da;
        xi.push(t);
    }
    Some((WaveSegment { xi, p: ps, branch }, area))
}

fn window_wave(r: f64, lower: &Branch, upper: &Branch, m: &ModelParams) -> Option<(f64, Vec<WaveSegment>, f64)> {
    let (la, lb) = feasible_window(r, lower, upper, m)?;
    let (ia, ib) = (invert_on_branch(m, lower, la)?, invert_on_branch(m, lower, lb)?);
    let (ja, jb) = (invert_on_branch(m, upper, la)?, invert_on_branch(m, upper, lb)?);
    for p in [ia, ib, ja, jb] {
        check_fold(p, m)?;
    }
    let (trough, area1) = segment_by_quadrature(ib, ia, 0.0, r, 0, m)?;
    let (crest, area2) = segment_by_quadrature(ja, jb, trough.end(), r, 1, m)?;
    let period = crest.end();
    Some(((area1 + area2) / period, vec![trough, crest], period))
}

fn degenerate_wave(m: &ModelParams, target_mass: f64, low: f64, high: f64, r: f64) -> Result<AdmissibleWave> {
    if !(target_mass > low && target_mass < high) {
        return Err(Error::NoResult(format!(
            "mass {target_mass} outside the plateau pair ({low}, {high})"
        )));
    }
    let theta = (target_mass - low) / (high - low);
    let segments = vec![
        WaveSegment {
            xi: vec![0.0, theta],
            p: vec![high, high],
            branch: 1,
        },
        WaveSegment {
            xi: vec![theta, 1.0],
            p: vec![low, low],
            branch: 0,
        },
    ];
    Ok(AdmissibleWave {
        r,
        period: 1.0,
        b_profile: b_samples(&segments, r, m),
        jump_points: jumps_of(&segments, 1.0),
        mass: target_mass,
        path: ConstructionPath::Degenerate,
        closed_form: None,
        segments,
        model: Some(m.clone()),
    })
}

/// Construction without switch points: `r*` at the midpoint of `R₁ ∩ R₂`,
/// a loop on the largest feasible window, then mass calibration on `r`.
pub fn generic_wave(m: &ModelParams, target_mass: f64) -> Result<AdmissibleWave> {
    if let Some((lo, hi, eps, _, _)) = step_parameters(m) {
        step_instability_check(lo, hi, eps)?;
    }
    over_pairs(m, target_mass, |lower, upper| generic_on(m, target_mass, *lower, *upper))
}

fn generic_on(m: &ModelParams, target_mass: f64, lower: Branch, upper: Branch) -> Result<AdmissibleWave> {
    let c = DerivedCurves::new(m);

    // window I on the lower branch sharing Λ-values with the upper branch
    let lvl_lo = c.ratio_at(lower.lo.max(1e-12)).max(c.ratio_at(upper.lo));
    let lvl_hi = c.ratio_at(lower.hi).min(c.ratio_at(upper.hi));
    let inner = 1e-6 * (lvl_hi - lvl_lo);
    let a = invert_on_branch(m, &lower, lvl_lo + inner).ok_or_else(|| Error::NoResult("empty window".into()))?;
    let b = invert_on_branch(m, &lower, lvl_hi - inner).ok_or_else(|| Error::NoResult("empty window".into()))?;
    let r1 = c.ratio_at(a) / c.fraction(a);
    let r2 = c.ratio_at(b) / c.fraction(b);
    let lo = r1.min(r2).max(c.ratio_at(b));
    let hi = r1.max(r2);
    if !(hi > lo) {
        return Err(Error::NoResult("R₁ ∩ R₂ is empty".into()));
    }
    let r_star = 0.5 * (lo + hi);

    // degenerate case: Γ meets Λ/r* on both branches at Λ-matched points
    let cross = |x: f64| c.fraction(x) - c.ratio_at(x) / r_star;
    let (fa, fb) = (cross(a), cross(b));
    if fa * fb < 0.0 {
        let (mut x0, mut f0, mut x1) = (a, fa, b);
        while x1 - x0 > 1e-14 {
            let mid = 0.5 * (x0 + x1);
            let fm = cross(mid);
            if (fm > 0.0) == (f0 > 0.0) {
                x0 = mid;
                f0 = fm;
            } else {
                x1 = mid;
            }
        }
        let rho_star = 0.5 * (x0 + x1);
        if let Some(rho_2) = invert_on_branch(m, &upper, c.ratio_at(rho_star)) {
            if cross(rho_2).abs() < 1e-9 {
                return degenerate_wave(m, target_mass, rho_star, rho_2, r_star);
            }
        }
    }

    let range = r_range(&lower, &upper, m);
    let (r, (segments, period)) = calibrate(target_mass, range, |r| {
        let (mass, segs, period) = window_wave(r, &lower, &upper, m)?;
        Some((mass, (segs, period)))
    })?;
    let mass = {
        let area: f64 = segments
            .iter()
            .map(|s| adaptive_simpson(|p| p / rhs_unchecked(p, r, m), s.p[0], *s.p.last().unwrap(), 1e-12))
            .sum();
        area / period
    };
    Ok(AdmissibleWave {
        r,
        period,
        b_profile: b_samples(&segments, r, m),
        jump_points: jumps_of(&segments, period),
        mass,
        path: ConstructionPath::Generic,
        closed_form: None,
        segments,
        model: Some(m.clone()),
    })
}
