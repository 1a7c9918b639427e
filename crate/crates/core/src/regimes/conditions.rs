//! Sufficient conditions for non-constant least-energy solutions, evaluated
//! literally as closed-form inequalities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DomainSpec;
use crate::operators::SystemParams;

use super::constants::constants_kqkm;

/// `min{√L₁, √L₂} / √(L₁ + L₂)`.
pub fn beta_underbar(l1: f64, l2: f64) -> Result<f64> {
    if !(l1 > 0.0 && l2 > 0.0) {
        return Err(Error::InvalidParams(format!("levels must be positive, got ({l1}, {l2})")));
    }
    Ok(l1.sqrt().min(l2.sqrt()) / (l1 + l2).sqrt())
}

/// Inputs some conditions need beyond the parameters and the domain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionInputs {
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    /// Best constant of `H¹ ⊂ L⁴`.
    pub c_s: Option<f64>,
}

/// `None` marks a condition that is not applicable (a division by zero or a
/// missing input).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionFlags {
    /// `(λ₁,λ₂) ∉ (0,∞)²` and `β > 0`.
    pub cooperative_nonpositive_masses: bool,
    /// `λ₁,λ₂ > 0` and `β` strictly between `λ₁/λ₂` and `λ₂/λ₁`.
    pub cooperative_ratio_window: Option<bool>,
    /// `M(λ₁^{(4-N)/2} + λ₂^{(4-N)/2}) ≤ (λ₁² + λ₂² - 2βλ₁λ₂)|Ω| / (4(1-β²))`.
    pub weak_cooperation_nonconstant: Option<bool>,
    /// `β ≥ max ratio` and the tent-function bound below
    /// `min{C_S² min{1,λ₁²,λ₂²}/4, constant energy}`.
    pub strong_cooperation_nonconstant: Option<bool>,
    /// `β ∈ (-1,0)` and `M(λ₁^{(4-N)/2} + λ₂^{(4-N)/2} + 2|β|(λ₁λ₂)^{(4-N)/4}) < λ₁² + λ₂² + 2|β|λ₁λ₂`.
    pub competitive_nonconstant: Option<bool>,
    /// `λ₁ = λ₂ = λ`: `λ^{N/2} > (2K+K₂)² / (4K₄|Ω|)`.
    pub equal_mass_nonconstant: Option<bool>,
    /// `β < min{(λ₁²+λ₂²) / (4M(λ₁^{(4-N)/2}+λ₂^{(4-N)/2})) - 1, β̲}` as
    /// written, without a volume factor.
    pub weak_cooperation_beta_bound: Option<bool>,
    /// The same bound with `|Ω|` multiplying `λ₁² + λ₂²`.
    pub weak_cooperation_beta_bound_volume: Option<bool>,
}

fn positive(p: &SystemParams) -> bool {
    p.lambda1 > 0.0 && p.lambda2 > 0.0
}

pub fn check_conditions(params: &SystemParams, domain: &DomainSpec, inputs: &ConditionInputs) -> ConditionFlags {
    let SystemParams { lambda1: l1, lambda2: l2, beta } = *params;
    let n = domain.dimension() as f64;
    let vol = domain.volume();
    let c = constants_kqkm(domain.dimension()).expect("domain dimension is validated");
    let e2 = (4.0 - n) / 2.0;
    let e4 = (4.0 - n) / 4.0;
    let pos = positive(params);
    let constant_energy = |b: f64| (l1 * l1 + l2 * l2 - 2.0 * b * l1 * l2) * vol / (4.0 * (1.0 - b * b));

    let ratio_window = if l1 == 0.0 || l2 == 0.0 {
        None
    } else if !pos {
        Some(false)
    } else {
        let (r1, r2) = (l1 / l2, l2 / l1);
        Some(beta > r1.min(r2) && beta < r1.max(r2))
    };

    let weak = if beta.abs() == 1.0 {
        None
    } else {
        Some(pos && c.m * (l1.powf(e2) + l2.powf(e2)) <= constant_energy(beta))
    };

    let strong = match inputs.c_s {
        _ if beta.abs() == 1.0 => None,
        None => None,
        Some(cs) => {
            if !pos {
                Some(false)
            } else {
                let lhs = (2.0 * c.k + c.k2).powi(2) / (8.0 * c.k4 * (1.0 + beta)) * (l1 + l2).powf(e2);
                let rhs = (cs * cs * 1f64.min(l1 * l1).min(l2 * l2) / 4.0).min(constant_energy(beta));
                Some(beta >= (l1 / l2).max(l2 / l1) && lhs < rhs)
            }
        }
    };

    let competitive = if !pos {
        Some(false)
    } else {
        let b = beta.abs();
        let lhs = c.m * (l1.powf(e2) + l2.powf(e2) + 2.0 * b * l1.powf(e4) * l2.powf(e4));
        Some(beta > -1.0 && beta < 0.0 && lhs < l1 * l1 + l2 * l2 + 2.0 * b * l1 * l2)
    };

    let equal = (l1 == l2 && l1 > 0.0).then(|| l1.powf(n / 2.0) > (2.0 * c.k + c.k2).powi(2) / (4.0 * c.k4 * vol));

    let underbar = match (inputs.l1, inputs.l2) {
        (Some(a), Some(b)) if pos => beta_underbar(a, b).ok(),
        _ => None,
    };
    let bound = |v: f64| {
        underbar.map(|ub| {
            let first = v * (l1 * l1 + l2 * l2) / (4.0 * c.m * (l1.powf(e2) + l2.powf(e2))) - 1.0;
            beta < first.min(ub)
        })
    };

    ConditionFlags {
        cooperative_nonpositive_masses: !pos && beta > 0.0,
        cooperative_ratio_window: ratio_window,
        weak_cooperation_nonconstant: weak,
        strong_cooperation_nonconstant: strong,
        competitive_nonconstant: competitive,
        equal_mass_nonconstant: equal,
        weak_cooperation_beta_bound: bound(1.0),
        weak_cooperation_beta_bound_volume: bound(vol),
    }
}

/// Upper bound for the ground level obtained from the tent test pair at
/// `ε = 1/(λ₁+λ₂)`: `(2K+K₂)²(λ₁+λ₂)^{(4-N)/2} / (8K₄(1+β))`.
pub fn tent_level_bound(params: &SystemParams, dimension: usize) -> Result<f64> {
    let c = constants_kqkm(dimension)?;
    let s = params.lambda1 + params.lambda2;
    if !(s > 0.0 && params.beta > -1.0) {
        return Err(Error::InvalidParams("tent bound needs lambda1 + lambda2 > 0 and beta > -1".into()));
    }
    Ok((2.0 * c.k + c.k2).powi(2) * s.powf((4.0 - dimension as f64) / 2.0) / (8.0 * c.k4 * (1.0 + params.beta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use approx::assert_relative_eq;

    fn unit(n: usize) -> DomainSpec {
        DomainSpec::unit(n, Boundary::Neumann).unwrap()
    }

    fn p(a: f64, b: f64, c: f64) -> SystemParams {
        SystemParams::new(a, b, c).unwrap()
    }

    #[test]
    fn underbar_values() {
        assert_relative_eq!(beta_underbar(2.0, 2.0).unwrap(), 0.5f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(beta_underbar(1.0, 3.0).unwrap(), 0.5, max_relative = 1e-15);
        assert!(beta_underbar(1.0, 5.0).unwrap() < beta_underbar(1.0, 3.0).unwrap());
        assert!(beta_underbar(0.0, 1.0).is_err());
    }

    #[test]
    fn documented_points() {
        let none = ConditionInputs::default();
        assert!(check_conditions(&p(-1.0, 3.0, 5.0), &unit(1), &none).cooperative_nonpositive_masses);
        assert_eq!(check_conditions(&p(1.0, 4.0, 2.0), &unit(1), &none).cooperative_ratio_window, Some(true));
        assert_eq!(check_conditions(&p(0.0, 4.0, 2.0), &unit(1), &none).cooperative_ratio_window, None);
        assert_eq!(check_conditions(&p(100.0, 100.0, -0.5), &unit(1), &none).competitive_nonconstant, Some(true));
    }

    #[test]
    fn tent_bound_value() {
        // N = 1: (2K+K₂)² = (14/3)², K₄ = 2/5
        let v = tent_level_bound(&p(1.0, 3.0, 1.0), 1).unwrap();
        assert_relative_eq!(v, (14.0f64 / 3.0).powi(2) * 8.0 / (8.0 * 0.4 * 2.0), max_relative = 1e-12);
    }
}
