use serde::{Deserialize, Serialize};

use super::{ode_rhs, OdeState};
use crate::error::{Error, Result};
use crate::model::ModelParams;

const INVARIANT_TOL: f64 = 1e-6;
const TAIL_START: f64 = 0.8;
const CYCLE_AMPLITUDE: f64 = 1e-4;
const CYCLE_RETURN: f64 = 1e-6;

/// Summary of the tail `t ≥ 0.8·t_end` of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSet {
    pub tail_min_d: f64,
    pub tail_max_d: f64,
    pub amplitude: f64,
    /// Distance in state space between the last two upward crossings of the
    /// mid level of `d`, if at least two occurred in the tail.
    pub return_distance: Option<f64>,
    pub period: Option<f64>,
    pub is_cycle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<OdeState>,
    pub limit: LimitSet,
}

impl Trajectory {
    pub fn last(&self) -> OdeState {
        *self.states.last().expect("trajectory is never empty")
    }
}

fn axpy(a: [f64; 3], h: f64, b: [f64; 3]) -> [f64; 3] {
    [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2]]
}

fn rk4_step(y: [f64; 3], h: f64, m: &ModelParams) -> [f64; 3] {
    let f = |y: [f64; 3]| ode_rhs(&OdeState::from_array(y), m);
    let k1 = f(y);
    let k2 = f(axpy(y, 0.5 * h, k1));
    let k3 = f(axpy(y, 0.5 * h, k2));
    let k4 = f(axpy(y, h, k3));
    let mut out = y;
    for i in 0..3 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Classical fixed-step RK4 from `s0` to `t_end`, every step recorded.
pub fn integrate_ode(s0: OdeState, m: &ModelParams, t_end: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::Parameter(format!("t_end must be positive, got {t_end}")));
    }
    if s0.invariant_violation() > INVARIANT_TOL {
        return Err(Error::Parameter(format!("initial state {s0:?} violates the invariant region")));
    }
    let n = (t_end / dt).ceil() as usize;
    let h = t_end / n as f64;
    let mut t = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut y = s0.to_array();
    t.push(0.0);
    states.push(s0);
    for i in 1..=n {
        y = rk4_step(y, h, m);
        let s = OdeState::from_array(y);
        let viol = s.invariant_violation();
        if !viol.is_finite() || viol > INVARIANT_TOL {
            return Err(Error::Numeric(format!(
                "state left the invariant region by {viol:.3e} at t = {:.6}; reduce dt",
                i as f64 * h
            )));
        }
        t.push(i as f64 * h);
        states.push(s);
    }
    let limit = limit_set(&t, &states, m, TAIL_START * t_end);
    Ok(Trajectory { t, states, limit })
}

/// Cubic Hermite interpolant on `[0, h]` between values `y0`, `y1` with slopes `f0`, `f1`.
fn hermite(y0: f64, y1: f64, f0: f64, f1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * f0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * f1
}

fn limit_set(t: &[f64], states: &[OdeState], m: &ModelParams, t_tail: f64) -> LimitSet {
    let start = t.iter().position(|&x| x >= t_tail).unwrap_or(t.len() - 1);
    let tail = &states[start..];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.d), hi.max(s.d)));
    let amplitude = hi - lo;

    // upward crossings of the mid level, located on the Hermite interpolant
    let level = 0.5 * (lo + hi);
    let mut crossings: Vec<(f64, [f64; 3])> = Vec::new();
    if amplitude > 0.0 {
        for i in start..states.len() - 1 {
            let (a, b) = (states[i], states[i + 1]);
            if a.d < level && b.d >= level {
                let h = t[i + 1] - t[i];
                let (ya, yb) = (a.to_array(), b.to_array());
                let (fa, fb) = (ode_rhs(&a, m), ode_rhs(&b, m));
                let (mut s0, mut s1) = (0.0, 1.0);
                for _ in 0..60 {
                    let mid = 0.5 * (s0 + s1);
                    if hermite(ya[0], yb[0], fa[0], fb[0], h, mid) < level {
                        s0 = mid;
                    } else {
                        s1 = mid;
                    }
                }
                let s = 0.5 * (s0 + s1);
                let p = [0, 1, 2].map(|k| hermite(ya[k], yb[k], fa[k], fb[k], h, s));
                crossings.push((t[i] + s * h, p));
            }
        }
    }
    let (return_distance, period) = match crossings.as_slice() {
        [.., (t0, p0), (t1, p1)] => {
            let dist = (0..3).map(|k| (p1[k] - p0[k]).powi(2)).sum::<f64>().sqrt();
            (Some(dist), Some(t1 - t0))
        }
        _ => (None, None),
    };
    LimitSet {
        tail_min_d: lo,
        tail_max_d: hi,
        amplitude,
        return_distance,
        period,
        is_cycle: amplitude > CYCLE_AMPLITUDE && return_distance.is_some_and(|r| r < CYCLE_RETURN),
    }
}
