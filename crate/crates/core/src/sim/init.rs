use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FieldState, Grid, System};
use crate::error::{param, Error, Result};
use crate::model::{DerivedCurves, ModelParams};

use std::f64::consts::PI;

/// Initial profile. Perturbations are shifted to zero discrete mean so the
/// total mass is exactly that of the homogeneous state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitKind {
    /// `u` gets `a·sin(2πnx)`, `v` stays homogeneous.
    Sine { amplitude: f64, mode: usize },
    /// `u` gets `a·cos(2πnx)` and `v` gets `a·cos(2π(n+1)x)`.
    CosinePair { amplitude: f64, mode: usize },
    /// Piecewise-constant blocks: block `j` covers `[breaks[j], breaks[j+1])`
    /// with a final block up to 1. Rescaled to the model mass.
    StepProfile { breaks: Vec<f64>, u: Vec<f64>, v: Vec<f64> },
    /// Uniform noise of half-width `amplitude` on both families.
    Noise { amplitude: f64, seed: u64 },
    /// Columns `u, v` and optionally `u1, v1`, one row per cell.
    CustomCsv { path: PathBuf },
}

impl FromStr for InitKind {
    type Err = Error;

    /// `sine:A[:N]`, `cosine:A[:N]`, `noise:A[:SEED]`, `csv:PATH`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.splitn(3, ':');
        let kind = parts.next().unwrap_or_default();
        let a = parts.next();
        let b = parts.next();
        let num = |x: Option<&str>, default: f64| -> Result<f64> {
            match x {
                None => Ok(default),
                Some(t) => t.parse().map_err(|_| Error::Config(format!("bad number '{t}' in '{s}'"))),
            }
        };
        match kind {
            "sine" => Ok(InitKind::Sine {
                amplitude: num(a, 0.05)?,
                mode: num(b, 1.0)? as usize,
            }),
            "cosine" | "cosine_pair" => Ok(InitKind::CosinePair {
                amplitude: num(a, 0.05)?,
                mode: num(b, 1.0)? as usize,
            }),
            "noise" => Ok(InitKind::Noise {
                amplitude: num(a, 0.05)?,
                seed: num(b, 0.0)? as u64,
            }),
            "csv" => Ok(InitKind::CustomCsv {
                path: PathBuf::from(a.ok_or_else(|| Error::Config("csv: needs a path".into()))?),
            }),
            _ => Err(Error::Config(format!("unknown initial condition '{s}'"))),
        }
    }
}

fn zero_mean(w: &mut [f64]) {
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    w.iter_mut().for_each(|x| *x -= mean);
}

fn wave(grid: &Grid, amplitude: f64, mode: usize, f: fn(f64) -> f64) -> Vec<f64> {
    let mut w: Vec<f64> = grid
        .centers()
        .iter()
        .map(|&x| amplitude * f(2.0 * PI * mode as f64 * x))
        .collect();
    zero_mean(&mut w);
    w
}

#[derive(Deserialize)]
struct CsvRow {
    u: f64,
    v: f64,
    u1: Option<f64>,
    v1: Option<f64>,
}

/// Fields for `kind` around the homogeneous isotropic state of `m`.
pub fn initial_conditions(kind: &InitKind, grid: &Grid, m: &ModelParams, system: System) -> Result<FieldState> {
    let n = grid.n_cells;
    let base = m.mean_density();
    let frac = DerivedCurves::new(m).fraction(base);
    let (u, v, reversible) = match kind {
        InitKind::Sine { amplitude, mode } => {
            let du = wave(grid, *amplitude, *mode, f64::sin);
            (du.iter().map(|d| base + d).collect(), vec![base; n], None)
        }
        InitKind::CosinePair { amplitude, mode } => {
            let du = wave(grid, *amplitude, *mode, f64::cos);
            let dv = wave(grid, *amplitude, mode + 1, f64::cos);
            (
                du.iter().map(|d| base + d).collect(),
                dv.iter().map(|d| base + d).collect(),
                None,
            )
        }
        InitKind::StepProfile { breaks, u, v } => step_profile(grid, breaks, u, v, m)?,
        InitKind::Noise { amplitude, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut du: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0) * amplitude).collect();
            let mut dv: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0) * amplitude).collect();
            zero_mean(&mut du);
            zero_mean(&mut dv);
            (
                du.iter().map(|d| base + d).collect(),
                dv.iter().map(|d| base + d).collect(),
                None,
            )
        }
        InitKind::CustomCsv { path } => {
            let mut rdr = csv::Reader::from_path(path)?;
            let rows: Vec<CsvRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
            if rows.len() != n {
                return Err(Error::Config(format!(
                    "{}: {} rows for a {n}-cell grid",
                    path.display(),
                    rows.len()
                )));
            }
            let u = rows.iter().map(|r| r.u).collect();
            let v = rows.iter().map(|r| r.v).collect();
            let rev = match (rows[0].u1, rows[0].v1) {
                (Some(_), Some(_)) => Some((
                    rows.iter().map(|r| r.u1.unwrap_or(0.0)).collect(),
                    rows.iter().map(|r| r.v1.unwrap_or(0.0)).collect(),
                )),
                _ => None,
            };
            (u, v, rev)
        }
    };
    let state = match system {
        System::MemoryFree => FieldState::memory_free(*grid, u, v)?,
        System::Full => {
            let (u1, v1) = reversible.unwrap_or_else(|| {
                (u.iter().map(|x| frac * x).collect(), v.iter().map(|x| frac * x).collect())
            });
            FieldState::full(*grid, u, v, u1, v1)?
        }
    };
    if let Some(i) = state.fields().iter().find_map(|f| f.iter().position(|&x| x < 0.0)) {
        return param(format!("initial condition is negative in cell {i}; reduce the amplitude"));
    }
    if state.system() == System::Full {
        let bad = (0..n).any(|i| state.u1[i] > state.u[i] + 1e-12 || state.v1[i] > state.v[i] + 1e-12);
        if bad {
            return param("reversible part exceeds its family density");
        }
    }
    Ok(state)
}

type Pair = (Vec<f64>, Vec<f64>, Option<(Vec<f64>, Vec<f64>)>);

fn step_profile(grid: &Grid, breaks: &[f64], u: &[f64], v: &[f64], m: &ModelParams) -> Result<Pair> {
    if breaks.is_empty() || breaks.len() != u.len() || u.len() != v.len() {
        return param("step profile needs matching breaks, u and v");
    }
    if breaks.windows(2).any(|w| w[1] <= w[0]) || breaks[0] != 0.0 || *breaks.last().unwrap() >= 1.0 {
        return param("step breaks must start at 0 and increase within [0, 1)");
    }
    let block = |x: f64| breaks.iter().rposition(|&b| b <= x).unwrap_or(0);
    let mut uu: Vec<f64> = grid.centers().iter().map(|&x| u[block(x)]).collect();
    let mut vv: Vec<f64> = grid.centers().iter().map(|&x| v[block(x)]).collect();
    let mass = super::compensated_sum(uu.iter().chain(&vv).copied()) * grid.dx;
    if !(mass > 0.0) {
        return param("step profile has no mass");
    }
    let scale = m.total_mass / mass;
    uu.iter_mut().chain(vv.iter_mut()).for_each(|x| *x *= scale);
    Ok((uu, vv, None))
}
