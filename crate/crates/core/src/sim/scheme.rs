use serde::{Deserialize, Serialize};

use super::{FieldState, Scheme, SimConfig, System, NEGATIVITY_LIMIT};
use crate::error::{numeric, Result};
use crate::model::ModelParams;

/// Upwind update for right movers, `w_i ← (1−c)w_i + c·w_{i−1}`.
fn transport_right(w: &mut [f64], c: f64) {
    let n = w.len();
    let wrap = w[n - 1];
    for i in (1..n).rev() {
        w[i] = (1.0 - c) * w[i] + c * w[i - 1];
    }
    w[0] = (1.0 - c) * w[0] + c * wrap;
}

/// Downwind update for left movers, `w_i ← (1−c)w_i + c·w_{i+1}`.
fn transport_left(w: &mut [f64], c: f64) {
    let n = w.len();
    let wrap = w[0];
    for i in 0..n - 1 {
        w[i] = (1.0 - c) * w[i] + c * w[i + 1];
    }
    w[n - 1] = (1.0 - c) * w[n - 1] + c * wrap;
}

fn diffuse(w: &mut [f64], k: f64, scratch: &mut Vec<f64>) {
    let n = w.len();
    scratch.clear();
    scratch.extend_from_slice(w);
    for i in 0..n {
        let l = scratch[(i + n - 1) % n];
        let r = scratch[(i + 1) % n];
        w[i] = scratch[i] + k * (l - 2.0 * scratch[i] + r);
    }
}

#[inline]
fn full_rhs(x: [f64; 4], m: &ModelParams) -> [f64; 4] {
    let [u, v, u1, v1] = x;
    let (lu, lv) = (m.lambda.value(u), m.lambda.value(v));
    let (gu, gv) = (m.gamma.value(u), m.gamma.value(v));
    let f = lu * v1 - lv * u1;
    [f, -f, gv * (u - u1) - lv * u1, gu * (v - v1) - lu * v1]
}

#[inline]
fn free_rhs(u: f64, v: f64, m: &ModelParams) -> f64 {
    m.lambda.value(u) * v - m.lambda.value(v) * u
}

fn add(a: [f64; 4], b: [f64; 4], h: f64) -> [f64; 4] {
    [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2], a[3] + h * b[3]]
}

fn react_full(s: &mut FieldState, dt: f64, scheme: Scheme, m: &ModelParams) {
    for i in 0..s.u.len() {
        let x = [s.u[i], s.v[i], s.u1[i], s.v1[i]];
        let y = match scheme {
            Scheme::SplittingEuler => add(x, full_rhs(x, m), dt),
            Scheme::SplittingRk4Reaction => {
                let k1 = full_rhs(x, m);
                let k2 = full_rhs(add(x, k1, 0.5 * dt), m);
                let k3 = full_rhs(add(x, k2, 0.5 * dt), m);
                let k4 = full_rhs(add(x, k3, dt), m);
                let mut y = x;
                for j in 0..4 {
                    y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                }
                y
            }
        };
        s.u[i] = y[0];
        s.v[i] = y[1];
        s.u1[i] = y[2];
        s.v1[i] = y[3];
    }
}

fn react_free(s: &mut FieldState, dt: f64, scheme: Scheme, m: &ModelParams) {
    for i in 0..s.u.len() {
        let (u, v) = (s.u[i], s.v[i]);
        let du = match scheme {
            Scheme::SplittingEuler => dt * free_rhs(u, v, m),
            Scheme::SplittingRk4Reaction => {
                let k1 = free_rhs(u, v, m);
                let k2 = free_rhs(u + 0.5 * dt * k1, v - 0.5 * dt * k1, m);
                let k3 = free_rhs(u + 0.5 * dt * k2, v - 0.5 * dt * k2, m);
                let k4 = free_rhs(u + dt * k3, v - dt * k3, m);
                dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            }
        };
        s.u[i] = u + du;
        s.v[i] = v - du;
    }
}

/// Clamps roundoff dust and rejects NaN or real negativity.
fn sanitize(s: &mut FieldState) -> Result<()> {
    const NAMES: [&str; 4] = ["u", "v", "u1", "v1"];
    let t = s.t;
    for (k, f) in s.fields_mut().into_iter().enumerate() {
        for (i, w) in f.iter_mut().enumerate() {
            if !w.is_finite() {
                return numeric(format!("{} is not finite in cell {i} at t = {t}", NAMES[k]));
            }
            if *w < 0.0 {
                if *w < NEGATIVITY_LIMIT {
                    return numeric(format!("{} = {w:.3e} < 0 in cell {i} at t = {t}", NAMES[k]));
                }
                *w = 0.0;
            }
        }
    }
    Ok(())
}

/// One split step: transport, reaction, then diffusion if enabled.
pub fn step(state: &FieldState, cfg: &SimConfig, m: &ModelParams) -> Result<FieldState> {
    cfg.validate(&state.grid)?;
    let mut next = state.clone();
    advance(&mut next, cfg, m, &mut Vec::new())?;
    Ok(next)
}

fn advance(s: &mut FieldState, cfg: &SimConfig, m: &ModelParams, scratch: &mut Vec<f64>) -> Result<()> {
    let dx = s.grid.dx;
    let c = cfg.dt / dx;
    transport_right(&mut s.u, c);
    transport_left(&mut s.v, c);
    match s.system() {
        System::Full => {
            transport_right(&mut s.u1, c);
            transport_left(&mut s.v1, c);
            react_full(s, cfg.dt, cfg.scheme, m);
        }
        System::MemoryFree => react_free(s, cfg.dt, cfg.scheme, m),
    }
    if cfg.diffusion_eps > 0.0 {
        let k = cfg.dt * cfg.diffusion_eps * cfg.diffusion_eps / (dx * dx);
        for f in s.fields_mut() {
            diffuse(f, k, scratch);
        }
    }
    s.t += cfg.dt;
    sanitize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub steps: usize,
    pub dt: f64,
    pub dx: f64,
    pub t_final: f64,
    pub mass_initial: f64,
    pub mass_final: f64,
    /// Largest `|mass(t) − mass(0)|` over the snapshots.
    pub mass_drift: f64,
    pub min_density: f64,
    pub warnings: Vec<String>,
    pub config: SimConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub snapshots: Vec<FieldState>,
    pub final_state: FieldState,
    pub meta: RunMeta,
}

/// Stepper holding the current state.
#[derive(Debug, Clone)]
pub struct Simulation {
    state: FieldState,
    cfg: SimConfig,
    model: ModelParams,
    steps: usize,
    scratch: Vec<f64>,
    warnings: Vec<String>,
}

impl Simulation {
    pub fn new(init: FieldState, cfg: SimConfig, model: ModelParams) -> Result<Self> {
        let warnings = cfg.validate(&init.grid)?;
        Ok(Self {
            state: init,
            cfg,
            model,
            steps: 0,
            scratch: Vec::new(),
            warnings,
        })
    }

    pub fn state(&self) -> &FieldState {
        &self.state
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn step(&mut self) -> Result<()> {
        advance(&mut self.state, &self.cfg, &self.model, &mut self.scratch)?;
        self.steps += 1;
        Ok(())
    }

    /// Number of steps needed to reach `t` from zero.
    pub fn steps_until(&self, t: f64) -> usize {
        (t / self.cfg.dt - 1e-9).ceil().max(0.0) as usize
    }

    /// Steps until the step count for `t` is reached.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        let target = self.steps_until(t);
        while self.steps < target {
            self.step()?;
        }
        Ok(())
    }
}

/// Runs to `cfg.t_end`, keeping a copy of the state every `snapshot_every` steps
/// (the initial state included).
pub fn simulate(init: &FieldState, cfg: &SimConfig, m: &ModelParams) -> Result<SimResult> {
    simulate_window(init, cfg, m, 0.0)
}

/// As [`simulate`], but snapshots start at `t_from`.
pub fn simulate_window(init: &FieldState, cfg: &SimConfig, m: &ModelParams, t_from: f64) -> Result<SimResult> {
    let mut sim = Simulation::new(init.clone(), cfg.clone(), m.clone())?;
    let total = sim.steps_until(cfg.t_end);
    let mass0 = init.mass();
    let mut drift: f64 = 0.0;
    let mut min_density = init.min_density();
    let mut snapshots = Vec::new();
    if t_from <= 0.0 {
        snapshots.push(init.clone());
    }
    for k in 1..=total {
        sim.step()?;
        if k % cfg.snapshot_every == 0 || k == total {
            let s = sim.state();
            drift = drift.max((s.mass() - mass0).abs());
            min_density = min_density.min(s.min_density());
            if s.t >= t_from - 0.5 * cfg.dt {
                snapshots.push(s.clone());
            }
        }
    }
    let final_state = sim.state().clone();
    Ok(SimResult {
        meta: RunMeta {
            steps: total,
            dt: cfg.dt,
            dx: init.grid.dx,
            t_final: final_state.t,
            mass_initial: mass0,
            mass_final: final_state.mass(),
            mass_drift: drift,
            min_density,
            warnings: sim.warnings.clone(),
            config: cfg.clone(),
        },
        snapshots,
        final_state,
    })
}
