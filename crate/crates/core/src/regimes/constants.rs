//! Ball constants `K`, `K_q`, `M` and the critical Sobolev constant `S`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallConstants {
    pub dimension: usize,
    /// Volume of the unit ball.
    pub k: f64,
    pub k2: f64,
    pub k4: f64,
    /// `(K + K₂)² / (4 K₄)`
    pub m: f64,
}

fn check_dim(n: usize) -> Result<()> {
    if (1..=4).contains(&n) {
        Ok(())
    } else {
        Err(Error::Dimension(n))
    }
}

fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0)
}

/// `|S^{N-1}| ∫₀¹ (1-r)^q r^{N-1} dr` through the Beta function.
pub fn k_q(n: usize, q: f64) -> Result<f64> {
    check_dim(n)?;
    let nf = n as f64;
    Ok(sphere_area(n) * gamma(nf) * gamma(q + 1.0) / gamma(nf + q + 1.0))
}

/// Same constant by adaptive Simpson quadrature of the radial integral.
pub fn k_q_quadrature(n: usize, q: f64) -> Result<f64> {
    check_dim(n)?;
    let f = |r: f64| (1.0 - r).powf(q) * r.powi(n as i32 - 1);
    Ok(sphere_area(n) * adaptive_simpson(&f, 0.0, 1.0, 1e-15, 50))
}

pub fn constants_kqkm(n: usize) -> Result<BallConstants> {
    check_dim(n)?;
    let k = sphere_area(n) / n as f64;
    let k2 = k_q(n, 2.0)?;
    let k4 = k_q(n, 4.0)?;
    Ok(BallConstants {
        dimension: n,
        k,
        k2,
        k4,
        m: (k + k2).powi(2) / (4.0 * k4),
    })
}

pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            left + right + diff / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    rec(f, a, b, fa, fm, fb, whole, tol, depth)
}

/// `∫₀^∞ s^{a-1} (1+s)^{-(a+b)} ds = B(a, b)`.
fn radial(a: f64, b: f64) -> f64 {
    beta(a, b)
}

/// Gradient energy and quartic mass of the Aubin-Talenti profile
/// `(8ε)^{1/2}/(ε+|x|²)` over all of ℝ⁴; both are independent of ε.
pub fn bubble_integrals() -> (f64, f64) {
    let area = 2.0 * PI * PI;
    // |U'|² r³ = 32 r⁵/(1+r²)⁴, and r dr = ds/2
    let grad = area * 32.0 * 0.5 * radial(3.0, 1.0);
    // U⁴ r³ = 64 r³/(1+r²)⁴
    let quartic = area * 64.0 * 0.5 * radial(2.0, 2.0);
    (grad, quartic)
}

/// Best constant of `D^{1,2}(ℝ⁴) ⊂ L⁴(ℝ⁴)`.
pub fn sobolev_s() -> f64 {
    let (grad, quartic) = bubble_integrals();
    grad / quartic.sqrt()
}

/// `√2 S / √(1+β)` for β > -1.
pub fn s_infinity_beta(beta: f64) -> Result<f64> {
    if !(beta > -1.0) {
        return Err(Error::InvalidParams(format!("S_inf needs beta > -1, got {beta}")));
    }
    Ok(2f64.sqrt() * sobolev_s() / (1.0 + beta).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_dimensional_values() {
        let c = constants_kqkm(1).unwrap();
        assert_relative_eq!(c.k, 2.0, max_relative = 1e-12);
        assert_relative_eq!(c.k2, 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(c.k4, 0.4, max_relative = 1e-12);
        assert_relative_eq!(c.m, 40.0 / 9.0, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for n in 1..=4 {
            for q in [1.0, 2.0, 4.0] {
                let a = k_q(n, q).unwrap();
                let b = k_q_quadrature(n, q).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-10);
            }
            let c = constants_kqkm(n).unwrap();
            let ratio = k_q(n, 2.0).unwrap() / k_q(n, 1.0).unwrap();
            assert_relative_eq!(ratio, beta(n as f64, 3.0) / beta(n as f64, 2.0), max_relative = 1e-12);
            assert!(c.m > 0.0);
        }
        assert_relative_eq!(constants_kqkm(2).unwrap().k, PI, max_relative = 1e-14);
        // 2π B(2, 3) = π/6
        assert_relative_eq!(constants_kqkm(2).unwrap().k2, PI / 6.0, max_relative = 1e-12);
        assert!(constants_kqkm(5).is_err());
        assert!(constants_kqkm(0).is_err());
    }

    #[test]
    fn sobolev_constant_of_bubble() {
        let (g, q) = bubble_integrals();
        // U solves -ΔU = U³, so both integrals agree
        assert_relative_eq!(g, q, max_relative = 1e-13);
        assert_relative_eq!(sobolev_s(), 8.0 * PI / 6f64.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(s_infinity_beta(1.0).unwrap(), sobolev_s(), max_relative = 1e-14);
        assert!(s_infinity_beta(-1.0).is_err());
    }
}
