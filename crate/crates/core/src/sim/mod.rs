//! Operator-splitting finite-difference simulator on the periodic unit interval.

mod init;
mod scheme;

pub use init::{initial_conditions, InitKind};
pub use scheme::{simulate, simulate_window, step, RunMeta, SimResult, Simulation};

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

pub const MIN_CELLS: usize = 16;
/// Negative values above this are clamped to zero, below it the run aborts.
pub const NEGATIVITY_LIMIT: f64 = -1e-9;

/// Uniform periodic grid on `[0, 1)` with cell centers at `(i + ½)dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n_cells: usize,
    pub dx: f64,
}

impl Grid {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < MIN_CELLS {
            return param(format!("grid needs at least {MIN_CELLS} cells, got {n_cells}"));
        }
        Ok(Self {
            n_cells,
            dx: 1.0 / n_cells as f64,
        })
    }

    /// Grid with the cell width closest to `dx`.
    pub fn with_spacing(dx: f64) -> Result<Self> {
        if !(dx > 0.0 && dx < 1.0) {
            return param(format!("cell width must lie in (0, 1), got {dx}"));
        }
        Self::new((1.0 / dx).round() as usize)
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum System {
    /// Four densities with reversible and refractory parts.
    #[default]
    Full,
    /// Two densities, every particle always reversible.
    MemoryFree,
}

/// Cell densities. `u1`, `v1` are empty for the memory-free system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub grid: Grid,
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub u1: Vec<f64>,
    pub v1: Vec<f64>,
}

impl FieldState {
    pub fn system(&self) -> System {
        if self.u1.is_empty() {
            System::MemoryFree
        } else {
            System::Full
        }
    }

    pub fn full(grid: Grid, u: Vec<f64>, v: Vec<f64>, u1: Vec<f64>, v1: Vec<f64>) -> Result<Self> {
        let s = Self {
            grid,
            t: 0.0,
            u,
            v,
            u1,
            v1,
        };
        s.check_shape()?;
        Ok(s)
    }

    pub fn memory_free(grid: Grid, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        Self::full(grid, u, v, Vec::new(), Vec::new())
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.grid.n_cells;
        let ok = self.u.len() == n
            && self.v.len() == n
            && self.u1.len() == self.v1.len()
            && (self.u1.is_empty() || self.u1.len() == n);
        if !ok {
            return param(format!("field lengths do not match the {n}-cell grid"));
        }
        Ok(())
    }

    /// `Σ(u + v)·dx`.
    pub fn mass(&self) -> f64 {
        compensated_sum(self.u.iter().chain(&self.v).copied()) * self.grid.dx
    }

    pub fn min_density(&self) -> f64 {
        self.fields().iter().flat_map(|f| f.iter()).copied().fold(f64::INFINITY, f64::min)
    }

    pub fn fields(&self) -> Vec<&Vec<f64>> {
        match self.system() {
            System::Full => vec![&self.u, &self.v, &self.u1, &self.v1],
            System::MemoryFree => vec![&self.u, &self.v],
        }
    }

    pub(crate) fn fields_mut(&mut self) -> Vec<&mut Vec<f64>> {
        if self.u1.is_empty() {
            vec![&mut self.u, &mut self.v]
        } else {
            vec![&mut self.u, &mut self.v, &mut self.u1, &mut self.v1]
        }
    }

    /// `u₁/u` with cells below `1e-12` mapped to NaN.
    pub fn fraction_u(&self) -> Vec<f64> {
        guarded_ratio(&self.u1, &self.u)
    }

    pub fn fraction_v(&self) -> Vec<f64> {
        guarded_ratio(&self.v1, &self.v)
    }
}

/// Neumaier summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in values {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

fn guarded_ratio(num: &[f64], den: &[f64]) -> Vec<f64> {
    num.iter()
        .zip(den)
        .map(|(&a, &b)| if b < 1e-12 { f64::NAN } else { a / b })
        .collect()
}

/// Run description as read from a JSON file. Exactly one of `n_cells` and
/// `dx` sets the grid; `dt` defaults to `0.99·dx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub n_cells: Option<usize>,
    #[serde(default)]
    pub dx: Option<f64>,
    #[serde(default)]
    pub system: System,
    pub t_end: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub diffusion_eps: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "one")]
    pub snapshot_every: usize,
    /// Snapshots before this time are dropped.
    #[serde(default)]
    pub snapshots_from: f64,
    #[serde(default)]
    pub allow_large_steps: bool,
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("sim: {e}")))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn grid(&self) -> Result<Grid> {
        match (self.n_cells, self.dx) {
            (Some(n), None) => Grid::new(n),
            (None, Some(dx)) => Grid::with_spacing(dx),
            (None, None) => Err(Error::Config("sim: set n_cells or dx".into())),
            (Some(_), Some(_)) => Err(Error::Config("sim: set only one of n_cells and dx".into())),
        }
    }

    pub fn sim_config(&self, grid: &Grid) -> SimConfig {
        SimConfig {
            dt: self.dt.unwrap_or(0.99 * grid.dx),
            t_end: self.t_end,
            diffusion_eps: self.diffusion_eps,
            scheme: self.scheme,
            snapshot_every: self.snapshot_every,
            allow_large_steps: self.allow_large_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    SplittingEuler,
    SplittingRk4Reaction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    /// `ε` of the viscous term `ε²·∂ₓₓ`.
    #[serde(default)]
    pub diffusion_eps: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "one")]
    pub snapshot_every: usize,
    /// Accept steps beyond the transport CFL limit with a warning.
    #[serde(default)]
    pub allow_large_steps: bool,
}

fn one() -> usize {
    1
}

impl SimConfig {
    /// `dt = 0.99·dx`, Euler reaction, no diffusion.
    pub fn for_grid(grid: &Grid, t_end: f64) -> Self {
        Self {
            dt: 0.99 * grid.dx,
            t_end,
            diffusion_eps: 0.0,
            scheme: Scheme::SplittingEuler,
            snapshot_every: 1,
            allow_large_steps: false,
        }
    }

    pub fn snapshots_every(mut self, n: usize) -> Self {
        self.snapshot_every = n;
        self
    }

    /// Checks the step constraints for `grid`. Returns warnings that do not abort.
    pub fn validate(&self, grid: &Grid) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::Config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if !(self.diffusion_eps >= 0.0) {
            return Err(Error::Config(format!("diffusion_eps must be non-negative, got {}", self.diffusion_eps)));
        }
        if self.snapshot_every == 0 {
            return Err(Error::Config("snapshot_every must be at least 1".into()));
        }
        if self.dt > grid.dx * (1.0 + 1e-12) {
            let msg = format!("dt = {} exceeds the CFL limit dx = {}", self.dt, grid.dx);
            if self.allow_large_steps {
                warnings.push(msg);
            } else {
                return Err(Error::Config(msg));
            }
        }
        if self.diffusion_eps > 0.0 {
            let limit = grid.dx * grid.dx / (2.0 * self.diffusion_eps * self.diffusion_eps);
            if self.dt > limit * (1.0 + 1e-12) {
                return Err(Error::Config(format!(
                    "dt = {} exceeds the diffusion limit dx²/(2ε²) = {limit}",
                    self.dt
                )));
            }
        }
        Ok(warnings)
    }
}
