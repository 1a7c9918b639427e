//! Regime classification of a parameter point and the method table.

use serde::{Deserialize, Serialize};

use crate::descent::SolveOptions;
use crate::error::Result;
use crate::grid::{default_nodes, DomainSpec, Grid};
use crate::operators::{continuum_split_counts, full_eigenbasis, split, SystemParams};
use crate::scalar::solve_scalar;
use crate::system::Method;

use super::conditions::{beta_underbar, check_conditions, tent_level_bound, ConditionFlags, ConditionInputs};
use super::constants::{constants_kqkm, s_infinity_beta, sobolev_s, BallConstants};
use super::estimates::{beta_star_estimate, sobolev_constant_cs};
use super::families::{constant_energy, constant_solutions, ConstantFamily};

/// Method picked for a parameter point, with the regime it was matched to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodChoice {
    pub method: Method,
    /// Descriptive name of the matched regime.
    pub clause: String,
    pub outside_theory: bool,
}

fn choice(method: Method, clause: &str, outside_theory: bool) -> MethodChoice {
    MethodChoice {
        method,
        clause: clause.into(),
        outside_theory,
    }
}

/// Deterministic regime table. `underbar` is `β̲(L₁, L₂)` when known; without
/// it the weak-cooperation row cannot match.
pub fn auto_select_method(params: &SystemParams, underbar: Option<f64>) -> MethodChoice {
    let SystemParams { lambda1: l1, lambda2: l2, beta } = *params;
    let positive = l1 > 0.0 && l2 > 0.0;
    let equal_nonpositive = l1 == l2 && l1 <= 0.0;
    if positive && beta < 0.0 {
        choice(Method::Nehari, "positive_masses_competitive", false)
    } else if positive && beta > 1.0 {
        choice(Method::MountainPass, "positive_masses_strong_cooperation", false)
    } else if beta > 0.0 && underbar.is_some_and(|ub| beta < ub) {
        choice(Method::GeneralizedNehari, "weak_cooperation_below_underbar", false)
    } else if l1 > 0.0 && l2 == 0.0 && beta < 0.0 {
        choice(Method::ZeroMass, "zero_second_mass_competitive", false)
    } else if equal_nonpositive && beta <= -1.0 {
        choice(Method::Symmetric, "equal_nonpositive_masses_strong_competition", false)
    } else if equal_nonpositive && beta != 0.0 && beta.abs() < 1.0 {
        choice(Method::GeneralizedNehari, "equal_nonpositive_masses_weak_coupling", false)
    } else {
        choice(Method::GeneralizedNehari, "outside_theory", true)
    }
}

/// Sizes of the negative and zero parts of the spectrum of `-Δ + λ`, from
/// the continuum box formula and, when a grid was built, from the discrete
/// operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub continuum_minus: usize,
    pub continuum_zero: usize,
    pub discrete_minus: Option<usize>,
    pub discrete_zero: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub params: SystemParams,
    pub domain: DomainSpec,
    /// Grid used for the levels and estimates, if any.
    pub nodes: Option<Vec<usize>>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub constants: BallConstants,
    pub beta_underbar: Option<f64>,
    /// Upper estimate of β*.
    pub beta_star_upper: Option<f64>,
    pub c_s: Option<f64>,
    /// Sobolev constant of ℝ⁴ from the bubble integrals.
    pub s: f64,
    pub s_infinity_beta: Option<f64>,
    pub constant_families: Vec<ConstantFamily>,
    pub constant_energy: Option<f64>,
    /// Ground level bound from the tent test pair.
    pub tent_level_bound: Option<f64>,
    pub conditions: ConditionFlags,
    pub split1: SplitCounts,
    pub split2: SplitCounts,
    pub selected: MethodChoice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyOptions {
    /// Solve the scalar problems for L₁, L₂ and derive β̲, β*, C_S.
    pub with_levels: bool,
    /// Grid for the solves; defaults per dimension when absent.
    pub nodes: Option<Vec<usize>>,
    pub beta_star_samples: usize,
    pub solve: SolveOptions,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            with_levels: false,
            nodes: None,
            beta_star_samples: 24,
            solve: SolveOptions::default(),
        }
    }
}

pub fn classify_regime(params: &SystemParams, domain: &DomainSpec, opts: &ClassifyOptions) -> Result<RegimeReport> {
    let dim = domain.dimension();
    let constants = constants_kqkm(dim)?;
    let positive = params.lambda1 > 0.0 && params.lambda2 > 0.0;
    let continuum = |lam: f64| {
        let (m, z) = continuum_split_counts(domain, lam);
        SplitCounts {
            continuum_minus: m,
            continuum_zero: z,
            discrete_minus: None,
            discrete_zero: None,
        }
    };
    let mut split1 = continuum(params.lambda1);
    let mut split2 = continuum(params.lambda2);

    let mut nodes = None;
    let (mut l1, mut l2, mut c_s, mut beta_star_upper) = (None, None, None, None);
    if opts.with_levels {
        let n = match &opts.nodes {
            Some(n) => n.clone(),
            None => default_nodes(dim)?,
        };
        let grid = Grid::new(domain.clone(), &n)?;
        let basis = full_eigenbasis(&grid);
        for (lam, counts) in [(params.lambda1, &mut split1), (params.lambda2, &mut split2)] {
            let s = split(&basis, lam)?;
            counts.discrete_minus = Some(s.minus.len());
            counts.discrete_zero = Some(s.zero.len());
        }
        let a = solve_scalar(params.lambda1, &grid, &opts.solve)?.level;
        let b = if params.lambda2 == params.lambda1 {
            a
        } else {
            solve_scalar(params.lambda2, &grid, &opts.solve)?.level
        };
        l1 = Some(a);
        l2 = Some(b);
        c_s = Some(sobolev_constant_cs(&grid, &opts.solve)?);
        if positive && a > 0.0 && b > 0.0 {
            let est = beta_star_estimate(params, &grid, a.min(b), opts.beta_star_samples, &opts.solve)?;
            beta_star_upper = Some(est.estimate);
        }
        nodes = Some(n);
    }
    let underbar = match (l1, l2) {
        (Some(a), Some(b)) if positive => beta_underbar(a, b).ok(),
        _ => None,
    };
    let conditions = check_conditions(params, domain, &ConditionInputs { l1, l2, c_s });
    Ok(RegimeReport {
        params: *params,
        domain: domain.clone(),
        nodes,
        l1,
        l2,
        constants,
        beta_underbar: underbar,
        beta_star_upper,
        c_s,
        s: sobolev_s(),
        s_infinity_beta: s_infinity_beta(params.beta).ok(),
        constant_families: constant_solutions(params),
        constant_energy: constant_energy(params, domain),
        tent_level_bound: tent_level_bound(params, dim).ok(),
        conditions,
        split1,
        split2,
        selected: auto_select_method(params, underbar),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    fn p(a: f64, b: f64, c: f64) -> SystemParams {
        SystemParams::new(a, b, c).unwrap()
    }

    #[test]
    fn method_table() {
        assert_eq!(auto_select_method(&p(5.0, 5.0, -2.0), None).method, Method::Nehari);
        assert_eq!(auto_select_method(&p(1.0, 4.0, 10.0), None).method, Method::MountainPass);
        let c = auto_select_method(&p(1.0, 4.0, 0.3), Some(0.4));
        assert_eq!((c.method, c.outside_theory), (Method::GeneralizedNehari, false));
        assert!(auto_select_method(&p(1.0, 4.0, 0.3), None).outside_theory);
        assert_eq!(auto_select_method(&p(10.0, 0.0, -50.0), None).method, Method::ZeroMass);
        assert_eq!(auto_select_method(&p(0.0, 0.0, -100.0), None).method, Method::Symmetric);
        let c = auto_select_method(&p(-1.0, -1.0, -0.1), None);
        assert_eq!((c.method, c.outside_theory), (Method::GeneralizedNehari, false));
        let c = auto_select_method(&p(-1.0, 2.0, 3.0), None);
        assert_eq!((c.method, c.outside_theory), (Method::GeneralizedNehari, true));
    }

    #[test]
    fn closed_form_report() {
        let d = DomainSpec::unit(1, Boundary::Neumann).unwrap();
        let r = classify_regime(&p(2.0, 2.0, 0.5), &d, &ClassifyOptions::default()).unwrap();
        assert!((r.constant_energy.unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!(r.l1.is_none() && r.beta_underbar.is_none());
        assert_eq!(r.split1.continuum_minus, 0);
        let r = classify_regime(&p(-20.0, 0.0, -0.5), &d, &ClassifyOptions::default()).unwrap();
        assert_eq!((r.split1.continuum_minus, r.split2.continuum_zero), (2, 1));
    }

    #[test]
    fn report_with_levels() {
        let d = DomainSpec::unit(1, Boundary::Neumann).unwrap();
        let opts = ClassifyOptions {
            with_levels: true,
            nodes: Some(vec![65]),
            beta_star_samples: 4,
            ..Default::default()
        };
        let r = classify_regime(&p(2.0, 2.0, 0.3), &d, &opts).unwrap();
        // λ = 2 < π²: the constant is the ground state, L = λ²/4
        assert!((r.l1.unwrap() - 1.0).abs() < 1e-9);
        assert!((r.beta_underbar.unwrap() - 0.5f64.sqrt()).abs() < 1e-6);
        assert!(r.beta_star_upper.unwrap() >= 1.0 - 1e-8);
        assert_eq!(r.selected.clause, "weak_cooperation_below_underbar");
        assert_eq!(r.split1.discrete_minus, Some(0));
    }
}
