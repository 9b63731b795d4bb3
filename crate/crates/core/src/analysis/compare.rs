use serde::{Deserialize, Serialize};

use super::speed::{circular_shift, WaveMeasurement};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::waves::{construct_admissible_wave, AdmissibleWave, WaveRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `∫|a − b|` over one period, after alignment and exclusion.
    pub l1_error: f64,
    pub linf_error: f64,
    /// Shift applied to the constructed profile, as a fraction of the period.
    pub optimal_shift: f64,
    /// `(constructed jump ξ, measured jump ξ)` after the shift.
    pub jump_alignment: Vec<(f64, f64)>,
    pub excluded_cells: usize,
    /// Constructed amplitude, for relative errors.
    pub amplitude: f64,
}

impl ComparisonReport {
    pub fn relative_l1(&self) -> f64 {
        self.l1_error / self.amplitude
    }
}

/// Period tolerance for comparable profiles.
pub const PERIOD_TOL: f64 = 0.05;

/// Cells within `radius` of one of the `count` steepest gradients.
fn jump_cells(w: &[f64], count: usize, radius: usize) -> (Vec<usize>, Vec<bool>) {
    let n = w.len();
    let mut grad: Vec<(usize, f64)> = (0..n).map(|i| (i, (w[(i + 1) % n] - w[i]).abs())).collect();
    grad.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let mut picked: Vec<usize> = Vec::new();
    for (i, _) in grad {
        if picked.len() == count {
            break;
        }
        let far = picked.iter().all(|&j| {
            let d = (i as i64 - j as i64).unsigned_abs() as usize;
            d.min(n - d) > 2 * radius + 1
        });
        if far {
            picked.push(i);
        }
    }
    let mut mask = vec![false; n];
    for &j in &picked {
        for d in 0..=2 * radius + 1 {
            // the jump sits between cells j and j+1
            mask[(j + n + d - radius) % n] = true;
        }
    }
    (picked, mask)
}

/// Compares a constructed wave with a measured comoving profile on the
/// unit-period grid, excluding `exclude` cells on each side of every jump.
pub fn compare_profiles(constructed: &AdmissibleWave, measured: &WaveMeasurement, exclude: usize) -> Result<ComparisonReport> {
    let n = measured.profile.len();
    let period = n as f64 * measured.dx;
    if (constructed.period - period).abs() > PERIOD_TOL * period {
        return Err(Error::Parameter(format!(
            "periods differ: constructed {} vs measured {period}",
            constructed.period
        )));
    }
    let scale = constructed.period / period;
    let sample = |shift: f64| -> Vec<f64> {
        (0..n)
            .map(|i| constructed.eval(((i as f64 + 0.5) * measured.dx - shift) * scale))
            .collect()
    };
    let base = sample(0.0);
    let cells = circular_shift(&base, &measured.profile);
    let shift = cells * measured.dx;
    let aligned = sample(shift);
    let jumps = constructed.jump_points.len();
    let report = compare_samples(&aligned, &measured.profile, measured.dx, jumps, exclude);
    let amplitude = constructed.amplitude();
    let alignment = constructed
        .jump_points
        .iter()
        .map(|j| {
            let c = (j.xi / scale + shift).rem_euclid(period);
            let m = report
                .1
                .iter()
                .map(|&i| (i as f64 + 1.0) * measured.dx)
                .min_by(|a, b| circ(*a - c, period).partial_cmp(&circ(*b - c, period)).unwrap())
                .unwrap_or(f64::NAN);
            (c, m)
        })
        .collect();
    Ok(ComparisonReport {
        l1_error: report.0 .0,
        linf_error: report.0 .1,
        optimal_shift: shift.rem_euclid(period),
        jump_alignment: alignment,
        excluded_cells: report.2,
        amplitude,
    })
}

fn circ(d: f64, p: f64) -> f64 {
    let d = d.rem_euclid(p);
    d.min(p - d)
}

type Samples = ((f64, f64), Vec<usize>, usize);

/// L¹/L∞ distance of two aligned samples, masking around the steepest jumps of `b`.
fn compare_samples(a: &[f64], b: &[f64], dx: f64, jumps: usize, exclude: usize) -> Samples {
    let (picked, mask) = if exclude > 0 && jumps > 0 {
        jump_cells(b, jumps, exclude)
    } else {
        (jump_cells(b, jumps, 0).0, vec![false; b.len()])
    };
    let mut l1 = 0.0;
    let mut linf: f64 = 0.0;
    for i in 0..a.len() {
        if mask[i] {
            continue;
        }
        let d = (a[i] - b[i]).abs();
        l1 += d * dx;
        linf = linf.max(d);
    }
    ((l1, linf), picked, mask.iter().filter(|&&m| m).count())
}

/// L¹/L∞ distance between two sampled periodic profiles after the best
/// circular shift of `b` onto `a`.
pub fn aligned_distance(a: &[f64], b: &[f64], dx: f64) -> (f64, f64, f64) {
    let s = circular_shift(b, a);
    let moved = super::speed::shift_profile(b, s);
    let l1 = a.iter().zip(&moved).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx;
    let linf = a.iter().zip(&moved).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    (l1, linf, s * dx)
}

/// Up- and down-jump positions of a two-jump periodic profile, located at
/// the mid-level crossing of each of the two steepest gradients.
pub fn jump_positions(w: &[f64], dx: f64) -> Result<(f64, f64)> {
    let n = w.len();
    let (picked, _) = jump_cells(w, 2, 3);
    if picked.len() < 2 {
        return Err(Error::NoResult("profile has fewer than two jumps".into()));
    }
    let locate = |j: usize| -> (f64, bool) {
        let left = w[(j + n - 3) % n];
        let right = w[(j + 4) % n];
        let mid = 0.5 * (left + right);
        let up = right > left;
        for d in 0..7 {
            let i = (j + n + d - 3) % n;
            let (a, b) = (w[i], w[(i + 1) % n]);
            if (a - mid) * (b - mid) <= 0.0 && a != b {
                let f = (mid - a) / (b - a);
                return (((i as f64 + 0.5 + f) * dx).rem_euclid(n as f64 * dx), up);
            }
        }
        (((j as f64 + 1.0) * dx).rem_euclid(n as f64 * dx), up)
    };
    let (a, b) = (locate(picked[0]), locate(picked[1]));
    match (a.1, b.1) {
        (true, false) => Ok((a.0, b.0)),
        (false, true) => Ok((b.0, a.0)),
        _ => Err(Error::NoResult("jumps do not alternate up and down".into())),
    }
}

/// Wave constructed for a measured profile: crest and trough lengths from the
/// measured jumps, mass from the measured mean.
pub fn wave_for_measurement(m: &ModelParams, measured: &WaveMeasurement, force_numeric: bool) -> Result<AdmissibleWave> {
    let period = measured.profile.len() as f64 * measured.dx;
    let (up, down) = jump_positions(&measured.profile, measured.dx)?;
    let crest = (down - up).rem_euclid(period);
    let mean = measured.profile.iter().sum::<f64>() / measured.profile.len() as f64;
    let req = WaveRequest {
        target_mass: mean,
        switch_points: Some((crest, period)),
        force_numeric,
    };
    construct_admissible_wave(m, &req)
}

/// `∫|a − b|` without alignment.
pub fn l1_distance(a: &[f64], b: &[f64], dx: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::speed::Field;
    use crate::model::{RateFunction, RateSpec};
    use crate::waves::closed_form_wave;
    use proptest::prelude::*;

    fn wave() -> AdmissibleWave {
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
        closed_form_wave(&m, 1.0, 0.3, 1.0).unwrap()
    }

    fn measurement(profile: Vec<f64>) -> WaveMeasurement {
        let n = profile.len();
        WaveMeasurement {
            field: Field::U,
            speed: 1.0,
            speed_ci: 0.0,
            range: 1.0,
            dx: 1.0 / n as f64,
            is_traveling: true,
            periodicity_error: 0.0,
            comoving_variance: 0.0,
            profile,
        }
    }

    #[test]
    fn shifted_copy_matches() {
        let w = wave();
        let n = 1000;
        let profile: Vec<f64> = (0..n).map(|i| w.eval((i as f64 + 0.5) / n as f64 - 0.3)).collect();
        let r = compare_profiles(&w, &measurement(profile), 0).unwrap();
        assert!(r.l1_error < 1e-12, "{}", r.l1_error);
        assert!((r.optimal_shift - 0.3).abs() < 1e-9);
        for (c, m) in &r.jump_alignment {
            assert!(circ(c - m, 1.0) < 1.5e-3, "{c} {m}");
        }
    }

    #[test]
    fn period_mismatch_is_rejected() {
        let w = wave();
        let mut meas = measurement(vec![1.0; 100]);
        meas.dx = 0.02;
        assert!(compare_profiles(&w, &meas, 0).is_err());
    }

    #[test]
    fn exclusion_masks_jump_cells() {
        let w = wave();
        let n = 500;
        // a shift by half a cell leaves errors only at the jumps
        let profile: Vec<f64> = (0..n).map(|i| w.eval((i as f64 + 0.5) / n as f64)).collect();
        let mut smeared = profile.clone();
        for i in 0..n {
            smeared[i] = 0.5 * (profile[i] + profile[(i + n - 1) % n]);
        }
        let r0 = compare_profiles(&w, &measurement(smeared.clone()), 0).unwrap();
        let r3 = compare_profiles(&w, &measurement(smeared), 3).unwrap();
        assert_eq!(r3.excluded_cells, 2 * 8);
        assert!(r3.l1_error < 0.2 * r0.l1_error);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn shift_invariant(k in 0usize..400, j in 0usize..400) {
            let n = 400;
            let a: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.05).sin() + 0.3 * ((i as f64) * 0.11).cos()).collect();
            let b: Vec<f64> = a.iter().map(|x| x * 1.1 + 0.05).collect();
            let rot = |v: &Vec<f64>, s: usize| -> Vec<f64> { (0..n).map(|i| v[(i + s) % n]).collect() };
            let base = aligned_distance(&a, &b, 1.0 / n as f64);
            let moved = aligned_distance(&rot(&a, k), &rot(&b, j), 1.0 / n as f64);
            prop_assert!((base.0 - moved.0).abs() < 1e-10);
            prop_assert!((base.1 - moved.1).abs() < 1e-10);
        }
    }
}
