//! Quadrature checks of the bubble and tent test functions against their
//! closed-form scaling laws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};
use crate::operators::form_b;

use super::constants::{constants_kqkm, k_q, s_infinity_beta, sobolev_s};

/// Quadrature of the cut-off half-space bubble `η·U_{ε,0}` in four dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubbleRecord {
    pub epsilon: f64,
    pub rho: f64,
    pub max_spacing: f64,
    pub grad_sq: f64,
    pub quartic: f64,
    pub l2_sq: f64,
    pub l1: f64,
    pub cube: f64,
    /// Full-space Sobolev constant from the radial integrals.
    pub s: f64,
    /// `S²/2`, the leading term of both `|∇w|²` and `|w|⁴` at a flat boundary.
    pub half_s_sq: f64,
    /// `|∇w|² / (S²/2)`.
    pub grad_ratio: f64,
    /// `|w|⁴ / (S²/2)`.
    pub quartic_ratio: f64,
    /// `|w|₂² / (ε |log ε|)`.
    pub l2_log_ratio: f64,
    /// `(β, √2 S/√(1+β))` for each requested coupling.
    pub s_infinity: Vec<(f64, f64)>,
}

/// C² quintic step: 1 on `[0, ρ/2]`, 0 beyond `ρ`.
pub fn quintic_cutoff(r: f64, rho: f64) -> f64 {
    let half = 0.5 * rho;
    if r <= half {
        1.0
    } else if r >= rho {
        0.0
    } else {
        let t = (r - half) / half;
        1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// Mirror images of the corner box that tile the half-space box
/// `[-ρ,ρ]³×[0,ρ]`.
const MIRROR_IMAGES: f64 = 8.0;

/// Builds `w_ε = η·(8ε)^{1/2}/(ε+|x|²)` centered at the origin corner and
/// integrates it on `grid`. The faces `x₁, x₂, x₃ = 0` act as mirror planes
/// (`w` is even across them and Neumann reflection matches that symmetry), so
/// eight copies of the box make up the half-space box with `x₄ = 0` as the
/// boundary face; all integrals are reported for that half-space box.
pub fn bubble_suite(epsilon: f64, grid: &Grid, rho: f64, betas: &[f64]) -> Result<BubbleRecord> {
    if grid.dimension() != 4 {
        return Err(Error::InvalidParams(format!("bubble suite needs N = 4, got {}", grid.dimension())));
    }
    if grid.boundary() != Boundary::Neumann {
        return Err(Error::InvalidParams("bubble suite needs Neumann conditions".into()));
    }
    if !(epsilon > 0.0 && rho > 0.0) {
        return Err(Error::InvalidParams(format!("epsilon and rho must be positive, got {epsilon}, {rho}")));
    }
    let sides = grid.domain().side_lengths();
    if sides.iter().any(|&l| l < rho * (1.0 - 1e-12)) {
        return Err(Error::InvalidParams(format!("cutoff radius {rho} does not fit the box {sides:?}")));
    }
    let h = grid.max_spacing();
    if epsilon < 4.0 * h * h * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!("epsilon = {epsilon} is below 4h^2 = {}", 4.0 * h * h)));
    }
    let amp = (8.0 * epsilon).sqrt();
    let w = grid.sample(|x| {
        let r2: f64 = x.iter().map(|a| a * a).sum();
        quintic_cutoff(r2.sqrt(), rho) * amp / (epsilon + r2)
    });
    let grad_sq = MIRROR_IMAGES * form_b(grid, &w, &w, 0.0);
    let quartic = MIRROR_IMAGES * grid.power_slice(&w, 4.0);
    let l2_sq = MIRROR_IMAGES * grid.power_slice(&w, 2.0);
    let l1 = MIRROR_IMAGES * grid.integrate_slice(&w);
    let cube = MIRROR_IMAGES * grid.power_slice(&w, 3.0);
    let s = sobolev_s();
    let half_s_sq = 0.5 * s * s;
    let s_infinity = betas
        .iter()
        .map(|&b| s_infinity_beta(b).map(|v| (b, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BubbleRecord {
        epsilon,
        rho,
        max_spacing: h,
        grad_sq,
        quartic,
        l2_sq,
        l1,
        cube,
        s,
        half_s_sq,
        grad_ratio: grad_sq / half_s_sq,
        quartic_ratio: quartic / half_s_sq,
        l2_log_ratio: l2_sq / (epsilon * epsilon.ln().abs()),
        s_infinity,
    })
}

/// One measured quantity of a tent function against its closed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    /// `"L1"`, `"L2"`, `"L4"` (q-th powers) or `"grad"`.
    pub quantity: String,
    pub measured: f64,
    pub predicted: f64,
    /// Exponent of ε in the closed form.
    pub exponent: f64,
    pub relative_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TentRecord {
    pub epsilon: f64,
    pub dimension: usize,
    pub max_spacing: f64,
    pub checks: Vec<ScalingCheck>,
}

/// `ε^{-N/2}(1 - ε^{-1/2}|x - x_c|)₊` centered at the middle of the box.
pub fn tent_values(grid: &Grid, epsilon: f64) -> Vec<f64> {
    let n = grid.dimension() as f64;
    let center: Vec<f64> = grid.domain().side_lengths().iter().map(|l| 0.5 * l).collect();
    let amp = epsilon.powf(-0.5 * n);
    let width = epsilon.sqrt();
    grid.sample(|x| {
        let r2: f64 = x.iter().zip(&center).map(|(a, c)| (a - c) * (a - c)).sum();
        amp * (1.0 - r2.sqrt() / width).max(0.0)
    })
}

pub fn tent_suite(epsilon: f64, grid: &Grid) -> Result<TentRecord> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
    }
    let dim = grid.dimension();
    let width = epsilon.sqrt();
    let h = grid.max_spacing();
    if width < 4.0 * h * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!("sqrt(epsilon) = {width} is below 4h = {}", 4.0 * h)));
    }
    let half_min = grid.domain().side_lengths().iter().copied().fold(f64::INFINITY, f64::min) * 0.5;
    if width > half_min {
        return Err(Error::InvalidParams(format!("tent radius {width} leaves the box")));
    }
    let phi = tent_values(grid, epsilon);
    let n = dim as f64;
    let mut checks = Vec::with_capacity(4);
    for q in [1.0, 2.0, 4.0] {
        let exponent = (1.0 - q) * n / 2.0;
        checks.push(check(format!("L{q}"), grid.power_slice(&phi, q), k_q(dim, q)? * epsilon.powf(exponent), exponent));
    }
    let exponent = -1.0 - n / 2.0;
    let k = constants_kqkm(dim)?.k;
    checks.push(check("grad".into(), form_b(grid, &phi, &phi, 0.0), k * epsilon.powf(exponent), exponent));
    Ok(TentRecord {
        epsilon,
        dimension: dim,
        max_spacing: h,
        checks,
    })
}

fn check(quantity: String, measured: f64, predicted: f64, exponent: f64) -> ScalingCheck {
    ScalingCheck {
        quantity,
        measured,
        predicted,
        exponent,
        relative_deviation: (measured - predicted) / predicted,
    }
}

/// Exponent of ε fitted between two successive ladder entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub quantity: String,
    pub eps_hi: f64,
    pub eps_lo: f64,
    pub fitted: f64,
    pub predicted: f64,
    /// Within 2% relative, or 0.02 absolute when the predicted exponent is 0.
    pub within_tolerance: bool,
}

pub fn fit_exponents(records: &[TentRecord]) -> Vec<ExponentFit> {
    let mut out = Vec::new();
    for pair in records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let ratio = (a.epsilon / b.epsilon).ln();
        for (ca, cb) in a.checks.iter().zip(&b.checks) {
            let fitted = (ca.measured / cb.measured).ln() / ratio;
            let predicted = ca.exponent;
            let within_tolerance = if predicted == 0.0 {
                fitted.abs() <= 0.02
            } else {
                ((fitted - predicted) / predicted).abs() <= 0.02
            };
            out.push(ExponentFit {
                quantity: ca.quantity.clone(),
                eps_hi: a.epsilon,
                eps_lo: b.epsilon,
                fitted,
                predicted,
                within_tolerance,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainSpec;
    use approx::assert_relative_eq;

    #[test]
    fn cutoff_shape() {
        assert_eq!(quintic_cutoff(0.1, 0.4), 1.0);
        assert_eq!(quintic_cutoff(0.4, 0.4), 0.0);
        assert_relative_eq!(quintic_cutoff(0.3, 0.4), 0.5, max_relative = 1e-14);
        let d = 1e-6;
        let slope = (quintic_cutoff(0.2 + d, 0.4) - 1.0) / d;
        assert!(slope.abs() < 1e-6);
    }

    #[test]
    fn one_dimensional_tent_integrals() {
        let g = Grid::new(DomainSpec::unit(1, Boundary::Neumann).unwrap(), &[2049]).unwrap();
        let eps = 0.0625;
        let r = tent_suite(eps, &g).unwrap();
        // apex and support ends sit on nodes, so ∫φ = K₁ = 1 exactly and the
        // gradient energy matches 2/ε^{3/2}
        assert_relative_eq!(r.checks[0].measured, 1.0, max_relative = 1e-12);
        assert_relative_eq!(r.checks[3].measured, 2.0 * eps.powf(-1.5), max_relative = 1e-12);
        assert!(r.checks[1].relative_deviation.abs() < 1e-5);
        assert!(matches!(tent_suite(1e-6, &g), Err(Error::Resolution(_))));
    }

    #[test]
    fn tent_exponents_in_two_dimensions() {
        let g = Grid::new(DomainSpec::unit(2, Boundary::Neumann).unwrap(), &[257, 257]).unwrap();
        let recs: Vec<_> = [0.04, 0.02, 0.01].iter().map(|&e| tent_suite(e, &g).unwrap()).collect();
        for f in fit_exponents(&recs) {
            assert!(f.within_tolerance, "{f:?}");
        }
    }

    #[test]
    fn bubble_guards() {
        let d = DomainSpec::new(vec![0.4; 4], Boundary::Neumann).unwrap();
        let g = Grid::new(d, &[5; 4]).unwrap();
        assert!(matches!(bubble_suite(1e-3, &g, 0.4, &[]), Err(Error::Resolution(_))));
        let r = bubble_suite(0.04, &g, 0.4, &[1.0]).unwrap();
        assert_relative_eq!(r.s_infinity[0].1, r.s, max_relative = 1e-15);
        assert!(r.grad_sq > 0.0 && r.l2_sq > 0.0);
    }
}
