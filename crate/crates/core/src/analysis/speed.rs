use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::sim::FieldState;

/// Field extracted from a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    U,
    V,
    U1,
    V1,
    U1OverU,
    V1OverV,
}

impl Field {
    pub const ALL: [Field; 6] = [Field::U, Field::V, Field::U1, Field::V1, Field::U1OverU, Field::V1OverV];

    pub fn name(self) -> &'static str {
        match self {
            Field::U => "u",
            Field::V => "v",
            Field::U1 => "u1",
            Field::V1 => "v1",
            Field::U1OverU => "u1_over_u",
            Field::V1OverV => "v1_over_v",
        }
    }

    /// Values per cell; fractions are NaN where the density is below `1e-12`.
    pub fn extract(self, s: &FieldState) -> Result<Vec<f64>> {
        let needs_full = !matches!(self, Field::U | Field::V);
        if needs_full && s.u1.is_empty() {
            return param(format!("field {} needs the full system", self.name()));
        }
        Ok(match self {
            Field::U => s.u.clone(),
            Field::V => s.v.clone(),
            Field::U1 => s.u1.clone(),
            Field::V1 => s.v1.clone(),
            Field::U1OverU => s.fraction_u(),
            Field::V1OverV => s.fraction_v(),
        })
    }
}

impl FromStr for Field {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Field::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown field '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveMeasurement {
    pub field: Field,
    pub speed: f64,
    /// Largest deviation of the displacement fit, divided by the time span.
    pub speed_ci: f64,
    /// Comoving profile in the frame of the last snapshot.
    pub profile: Vec<f64>,
    pub dx: f64,
    pub is_traveling: bool,
    /// RMS deviation of the aligned snapshots from the comoving profile, over the profile range.
    pub periodicity_error: f64,
    /// Mean squared deviation of the aligned snapshots over the squared range.
    pub comoving_variance: f64,
    pub range: f64,
}

pub const MIN_SNAPSHOTS: usize = 10;
/// Comoving variance below this fraction of the squared range counts as traveling.
pub const TRAVELING_TOL: f64 = 0.01;

/// NaN cells replaced by the mean of the valid ones.
fn fill_invalid(w: &[f64]) -> Vec<f64> {
    let valid: Vec<f64> = w.iter().copied().filter(|x| x.is_finite()).collect();
    let mean = if valid.is_empty() {
        0.0
    } else {
        valid.iter().sum::<f64>() / valid.len() as f64
    };
    w.iter().map(|&x| if x.is_finite() { x } else { mean }).collect()
}

fn centered(w: &[f64]) -> Vec<f64> {
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    w.iter().map(|x| x - mean).collect()
}

/// Shift `s` (in cells, sub-cell accurate) maximizing `Σ a[i]·b[i+s]`,
/// i.e. `b` ≈ `a` moved right by `s` cells.
pub fn circular_shift(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let (a, b) = (centered(a), centered(b));
    let corr = |s: usize| -> f64 { (0..n).map(|i| a[i] * b[(i + s) % n]).sum() };
    let values: Vec<f64> = (0..n).map(corr).collect();
    let best = (0..n).max_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap()).unwrap();
    let (l, c, r) = (values[(best + n - 1) % n], values[best], values[(best + 1) % n]);
    let denom = l - 2.0 * c + r;
    let frac = if denom.abs() > 1e-300 { 0.5 * (l - r) / denom } else { 0.0 };
    let s = best as f64 + frac.clamp(-0.5, 0.5);
    if s > n as f64 / 2.0 {
        s - n as f64
    } else {
        s
    }
}

/// `w` moved by `s` cells (positive moves right), linear interpolation.
pub fn shift_profile(w: &[f64], s: f64) -> Vec<f64> {
    let n = w.len();
    (0..n)
        .map(|i| {
            let x = (i as f64 - s).rem_euclid(n as f64);
            let j = x.floor() as usize % n;
            let f = x - x.floor();
            (1.0 - f) * w[j] + f * w[(j + 1) % n]
        })
        .collect()
}

fn range_of(w: &[f64]) -> f64 {
    let (lo, hi) = w
        .iter()
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// Speed from cross-correlating consecutive snapshots and fitting the
/// accumulated displacement against time.
pub fn measure_wave_speed(snapshots: &[FieldState], field: Field) -> Result<WaveMeasurement> {
    if snapshots.len() < MIN_SNAPSHOTS {
        return param(format!("need at least {MIN_SNAPSHOTS} snapshots, got {}", snapshots.len()));
    }
    let dx = snapshots[0].grid.dx;
    let data: Vec<Vec<f64>> = snapshots
        .iter()
        .map(|s| field.extract(s).map(|w| fill_invalid(&w)))
        .collect::<Result<_>>()?;
    let times: Vec<f64> = snapshots.iter().map(|s| s.t).collect();
    let last = data.last().unwrap();
    let range = range_of(last);
    let scale = 1.0 + last.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if data.iter().all(|w| range_of(w) < 1e-12 * scale) {
        return Ok(WaveMeasurement {
            field,
            speed: 0.0,
            speed_ci: f64::INFINITY,
            profile: last.clone(),
            dx,
            is_traveling: false,
            periodicity_error: 0.0,
            comoving_variance: 0.0,
            range,
        });
    }

    let mut disp = vec![0.0];
    for w in data.windows(2) {
        let s = circular_shift(&w[0], &w[1]);
        disp.push(disp.last().unwrap() + s * dx);
    }
    let n = times.len() as f64;
    let tm = times.iter().sum::<f64>() / n;
    let dm = disp.iter().sum::<f64>() / n;
    let stt: f64 = times.iter().map(|t| (t - tm).powi(2)).sum();
    let std_: f64 = times.iter().zip(&disp).map(|(t, d)| (t - tm) * (d - dm)).sum();
    if !(stt > 0.0) {
        return Err(Error::Parameter("snapshots must span a positive time".into()));
    }
    let speed = std_ / stt;
    let span = times.last().unwrap() - times[0];
    let band = times
        .iter()
        .zip(&disp)
        .map(|(t, d)| (d - dm - speed * (t - tm)).abs())
        .fold(0.0, f64::max);

    // align every snapshot to the last frame with the fitted motion
    let t_last = *times.last().unwrap();
    let aligned: Vec<Vec<f64>> = data
        .iter()
        .zip(&times)
        .map(|(w, t)| shift_profile(w, speed * (t_last - t) / dx))
        .collect();
    let cells = last.len();
    let profile: Vec<f64> = (0..cells)
        .map(|i| aligned.iter().map(|w| w[i]).sum::<f64>() / aligned.len() as f64)
        .collect();
    let msd = aligned
        .iter()
        .flat_map(|w| w.iter().zip(&profile).map(|(a, b)| (a - b).powi(2)))
        .sum::<f64>()
        / (aligned.len() * cells) as f64;
    let periodicity_error = if range > 0.0 { msd.sqrt() / range } else { f64::INFINITY };
    let comoving_variance = if range > 0.0 { msd / (range * range) } else { f64::INFINITY };
    Ok(WaveMeasurement {
        field,
        speed,
        speed_ci: band / span,
        profile,
        dx,
        is_traveling: comoving_variance < TRAVELING_TOL,
        periodicity_error,
        comoving_variance,
        range,
    })
}
