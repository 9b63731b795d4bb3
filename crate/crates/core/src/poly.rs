//! Polynomial root finding and characteristic polynomials of small complex
//! matrices.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DK_TOL: f64 = 1e-12;
pub const DK_MAX_ITER: usize = 200;

/// Evaluate `Σ c[i] zⁱ` (ascending coefficients) by Horner's rule.
pub fn eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn backward_scale(coeffs: &[Complex64], z: Complex64) -> f64 {
    let r = z.norm();
    coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
}

/// All roots of the polynomial with ascending coefficients `coeffs` via the
/// Durand–Kerner (Weierstrass) iteration.
///
/// Converged when every correction is below `tol` relative to the root
/// magnitude, or every root has a backward error below `tol` (the latter
/// covers clustered roots, where corrections stall at √ε).
pub fn durand_kerner(coeffs: &[Complex64], tol: f64, max_iter: usize) -> Result<Vec<Complex64>> {
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n];
    if lead.norm() == 0.0 {
        return Err(Error::Numeric("leading coefficient is zero".into()));
    }
    let monic: Vec<Complex64> = coeffs.iter().map(|&c| c / lead).collect();
    if n == 1 {
        return Ok(vec![-monic[0]]);
    }
    let radius = 1.0
        + monic[..n]
            .iter()
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(0.9 * radius, theta)
        })
        .collect();

    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let mut max_step = 0.0_f64;
        for k in 0..n {
            let zk = z[k];
            let mut denom = Complex64::new(1.0, 0.0);
            for (j, &zj) in z.iter().enumerate() {
                if j != k {
                    denom *= zk - zj;
                }
            }
            if denom.norm() == 0.0 {
                // coincident iterates; nudge apart
                z[k] += Complex64::new(tol.sqrt(), tol.sqrt());
                max_step = f64::INFINITY;
                continue;
            }
            let step = eval(&monic, zk) / denom;
            z[k] = zk - step;
            max_step = max_step.max(step.norm() / zk.norm().max(1.0));
        }
        residual = z
            .iter()
            .map(|&zk| eval(&monic, zk).norm() / backward_scale(&monic, zk))
            .fold(0.0_f64, f64::max);
        if max_step <= tol || residual <= tol {
            return Ok(z);
        }
    }
    Err(Error::Numeric(format!(
        "Durand-Kerner did not converge in {max_iter} iterations (max backward residual {residual:.3e})"
    )))
}

/// Ascending coefficients of `det(xI − A)` by the Faddeev–LeVerrier recursion.
pub fn char_poly(a: &[Vec<Complex64>]) -> Vec<Complex64> {
    let n = a.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut coeffs = vec![zero; n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    let mut m = vec![vec![zero; n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = vec![vec![zero; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = zero;
                for l in 0..n {
                    s += a[i][l] * m[l][j];
                }
                next[i][j] = s;
            }
            next[i][i] += coeffs[n - k + 1];
        }
        m = next;
        let mut tr = zero;
        for i in 0..n {
            for l in 0..n {
                tr += a[i][l] * m[l][i];
            }
        }
        coeffs[n - k] = -tr / k as f64;
    }
    coeffs
}

/// Eigenvalues of a small complex matrix through its characteristic polynomial.
pub fn eigenvalues(a: &[Vec<Complex64>]) -> Result<Vec<Complex64>> {
    durand_kerner(&char_poly(a), DK_TOL, DK_MAX_ITER)
}

/// Roots of `z² + p z + q` with real coefficients.
pub fn quadratic_roots(p: f64, q: f64) -> [Complex64; 2] {
    let disc = p * p - 4.0 * q;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // avoid cancellation
        let sign = if p >= 0.0 { 1.0 } else { -1.0 };
        let r1 = -0.5 * (p + sign * s);
        let r2 = if r1 != 0.0 { q / r1 } else { 0.0 };
        [Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)]
    } else {
        let re = -0.5 * p;
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn finds_known_roots() {
        // (x-1)(x+2)(x-3i)(x+3i) = (x² + x - 2)(x² + 9)
        let coeffs = [c(-18.0), c(9.0), c(7.0), c(1.0), c(1.0)];
        let roots = durand_kerner(&coeffs, DK_TOL, DK_MAX_ITER).unwrap();
        let expected = [
            Complex64::new(-2.0, 0.0),
            Complex64::new(0.0, -3.0),
            Complex64::new(0.0, 3.0),
            Complex64::new(1.0, 0.0),
        ];
        for e in expected {
            assert!(roots.iter().any(|r| (r - e).norm() < 1e-10), "{e} missing from {roots:?}");
        }
    }

    #[test]
    fn handles_double_root() {
        // (x+1)²(x-2); a double root is only resolved to about √tol
        let coeffs = [c(-2.0), c(-3.0), c(0.0), c(1.0)];
        let roots = durand_kerner(&coeffs, DK_TOL, DK_MAX_ITER).unwrap();
        let near = |t: f64| roots.iter().filter(|r| (*r - c(t)).norm() < 1e-5).count();
        assert_eq!(near(-1.0), 2);
        assert_eq!(near(2.0), 1);
    }

    #[test]
    fn char_poly_of_diagonal() {
        let a = vec![
            vec![c(1.0), c(0.0), c(0.0)],
            vec![c(0.0), c(2.0), c(0.0)],
            vec![c(0.0), c(0.0), c(3.0)],
        ];
        let p = char_poly(&a);
        let expected = [-6.0, 11.0, -6.0, 1.0];
        for (x, e) in p.iter().zip(expected) {
            assert!((x - c(e)).norm() < 1e-12);
        }
    }

    #[test]
    fn quadratic_roots_real_and_complex() {
        let [a, b] = quadratic_roots(-3.0, 2.0);
        let mut r = [a.re, b.re];
        r.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((r[0] - 1.0).abs() < 1e-14 && (r[1] - 2.0).abs() < 1e-14);
        let [a, b] = quadratic_roots(2.0, 2.0);
        assert!((a - Complex64::new(-1.0, 1.0)).norm() < 1e-14);
        assert!((b - Complex64::new(-1.0, -1.0)).norm() < 1e-14);
    }
}
