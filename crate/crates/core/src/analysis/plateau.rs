use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bin width as a fraction of the field range.
pub const BIN_FRACTION: f64 = 0.005;
/// Relative range below which a field counts as homogeneous.
pub const FLAT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauFit {
    /// Plateau heights in increasing order.
    pub levels: Vec<f64>,
    /// Mean `|w − nearest level|` over the range of `w`.
    pub residual: f64,
    pub range: f64,
}

/// Two plateau heights from the two most populated, well separated histogram
/// bins, each refined to the mean of the values in its bin.
pub fn extract_plateaus(w: &[f64]) -> Result<PlateauFit> {
    let (lo, hi) = w
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let range = hi - lo;
    if !(range > FLAT_TOL * (1.0 + lo.abs().max(hi.abs()))) {
        return Err(Error::NoResult(format!("field is flat (range {range:.3e}), no plateau pair")));
    }
    let bins = (1.0 / BIN_FRACTION).round() as usize;
    let width = range / bins as f64;
    let bin_of = |x: f64| (((x - lo) / width) as usize).min(bins - 1);
    let mut counts = vec![0usize; bins];
    for &x in w {
        counts[bin_of(x)] += 1;
    }
    let mut order: Vec<usize> = (0..bins).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]));
    let first = order[0];
    // the second mode must be at least a tenth of the range away
    let min_gap = bins / 10;
    let second = order
        .iter()
        .copied()
        .find(|&b| (b as i64 - first as i64).unsigned_abs() as usize >= min_gap && counts[b] > 0)
        .ok_or_else(|| Error::NoResult("single mode only".into()))?;
    let level = |bin: usize| {
        let vals: Vec<f64> = w.iter().copied().filter(|&x| bin_of(x) == bin).collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    let mut levels = vec![level(first), level(second)];
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let residual = w
        .iter()
        .map(|&x| levels.iter().map(|l| (x - l).abs()).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / w.len() as f64
        / range;
    Ok(PlateauFit { levels, residual, range })
}

/// Largest relative mismatch between fitted levels and expected values.
pub fn plateau_mismatch(fit: &PlateauFit, expected: (f64, f64)) -> f64 {
    let (a, b) = if expected.0 <= expected.1 { expected } else { (expected.1, expected.0) };
    ((fit.levels[0] - a).abs() / a).max((fit.levels[1] - b).abs() / b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_levels_recovered() {
        let mut w = vec![0.37; 300];
        w.extend(vec![3.45; 200]);
        w.push(1.9);
        let fit = extract_plateaus(&w).unwrap();
        assert!((fit.levels[0] - 0.37).abs() < 1e-12);
        assert!((fit.levels[1] - 3.45).abs() < 1e-12);
        assert!(fit.residual < 0.01);
        assert!(plateau_mismatch(&fit, (3.45, 0.37)) < 1e-12);
    }

    #[test]
    fn smooth_profile_has_large_residual() {
        let w: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.00628).sin()).collect();
        let fit = extract_plateaus(&w).unwrap();
        assert!(fit.residual > 0.1);
    }

    #[test]
    fn constant_has_no_plateaus() {
        assert!(extract_plateaus(&[1.0; 20]).is_err());
        let dust: Vec<f64> = (0..20).map(|i| 1.0 + 1e-14 * i as f64).collect();
        assert!(extract_plateaus(&dust).is_err());
    }
}
