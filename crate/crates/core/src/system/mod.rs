//! Solvers for the coupled system: Nehari descent, mountain-pass quotient,
//! generalized Nehari with indefinite quadratic part, zero-mass constraint set
//! and the symmetric competitive functional.

mod problems;
mod solvers;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::descent::TraceEntry;
use crate::error::{Error, Result};
use crate::grid::{Field, Pair};
use crate::operators::{PairMoments, SystemParams};
use crate::regimes::families::{constant_solutions, FamilyKind};

pub use solvers::{
    descend_system_from, solve_generalized_nehari, solve_mountain_pass, solve_nehari_positive, solve_symmetric_competitive,
    solve_system, solve_zero_mass,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "nehari")]
    Nehari,
    #[serde(rename = "mp")]
    MountainPass,
    #[serde(rename = "gnehari")]
    GeneralizedNehari,
    #[serde(rename = "zeromass")]
    ZeroMass,
    #[serde(rename = "symmetric")]
    Symmetric,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Nehari => "nehari",
            Method::MountainPass => "mp",
            Method::GeneralizedNehari => "gnehari",
            Method::ZeroMass => "zeromass",
            Method::Symmetric => "symmetric",
        }
    }

    pub fn level(self) -> LevelTag {
        match self {
            Method::Nehari => LevelTag::NehariM,
            Method::MountainPass => LevelTag::MountainPassC,
            Method::GeneralizedNehari => LevelTag::GeneralizedNehariM,
            Method::ZeroMass => LevelTag::ZeroMassM,
            Method::Symmetric => LevelTag::SymmetricL,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nehari" => Ok(Method::Nehari),
            "mp" | "mountain-pass" => Ok(Method::MountainPass),
            "gnehari" => Ok(Method::GeneralizedNehari),
            "zeromass" | "zero-mass" => Ok(Method::ZeroMass),
            "symmetric" => Ok(Method::Symmetric),
            other => Err(Error::InvalidParams(format!("unknown method '{other}'"))),
        }
    }
}

/// Which level the reported energy bounds from above.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelTag {
    NehariM,
    MountainPassC,
    GeneralizedNehariM,
    ZeroMassM,
    SymmetricL,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionFlags {
    pub fully_nontrivial: bool,
    pub semi_trivial: bool,
    pub constant: bool,
    pub positive: bool,
    pub sign_changing: bool,
    /// Constant family the pair matches, if any.
    pub constant_family: Option<FamilyKind>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NehariScaling {
    pub t: f64,
    pub s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    TwoConstraint,
    ZeroMass,
}

/// Determinant and definiteness of the constraint matrix at the output.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobianCheck {
    pub determinant: f64,
    pub negative_definite: bool,
    /// Determinant below 1e-12 times the product of the row norms.
    pub singular: bool,
}

/// `‖u‖²_λ₁ ≥ C²_{S,λ₁} = 4 L_λ₁` on the zero-mass Nehari set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCheck {
    pub norm_sq: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub pair: Pair,
    pub params: SystemParams,
    pub method: Method,
    pub level: LevelTag,
    /// Energy of `pair`; an upper bound for the tagged level.
    pub energy: f64,
    pub residual_inf: f64,
    pub residual_tol: f64,
    pub constraint_residuals: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// The final point came from the Newton polish.
    pub polished: bool,
    pub flags: SolutionFlags,
    pub overlap: f64,
    /// `|u - v|₂`, recorded without drawing conclusions.
    pub component_gap: f64,
    pub outside_theory: bool,
    pub resonant: bool,
    pub inner_failure: bool,
    pub jacobian: Option<JacobianCheck>,
    pub lower_bound: Option<LowerBoundCheck>,
    pub converged_candidates: usize,
    pub seed_index: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEntry>,
}

/// Closed-form solution of the two Nehari equations for `(t u, s v)` given
/// the quadratic parts `qu`, `qv`, quartic masses `a`, `b` and overlap `c`.
pub(crate) fn two_scaling(qu: f64, qv: f64, a: f64, b: f64, c: f64, beta: f64) -> Result<(f64, f64)> {
    let d = a * b - beta * beta * c * c;
    if !(d > 0.0) {
        return Err(Error::GramDegenerate(d));
    }
    let t2 = (qu * b - beta * c * qv) / d;
    let s2 = (qv * a - beta * c * qu) / d;
    if !(t2 > 0.0 && s2 > 0.0 && t2.is_finite() && s2.is_finite()) {
        return Err(Error::InfeasibleScaling { t2, s2 });
    }
    Ok((t2, s2))
}

/// Scalings `(t, s)` that put `(t u, s v)` on the two-constraint Nehari set.
pub fn nehari_scaling(u: &Field, v: &Field, params: &SystemParams) -> Result<NehariScaling> {
    u.same_grid(v)?;
    let m = PairMoments::compute(u.grid(), u.values(), v.values(), params);
    if !(m.a > 0.0 && m.b > 0.0) {
        return Err(Error::GramDegenerate(m.a * m.b));
    }
    let (t2, s2) = two_scaling(m.bu, m.bv, m.a, m.b, m.c, params.beta)?;
    Ok(NehariScaling {
        t: t2.sqrt(),
        s: s2.sqrt(),
    })
}

/// `B((u,v),(u,v))² / (4 (|u|⁴ + 2β∫u²v² + |v|⁴))`, or `None` when the
/// denominator is not positive.
pub fn mp_quotient(pair: &Pair, params: &SystemParams) -> Option<f64> {
    let m = PairMoments::compute(pair.grid(), pair.u.values(), pair.v.values(), params);
    let d = m.a + 2.0 * params.beta * m.c + m.b;
    let b = m.bu + m.bv;
    (d > 0.0).then(|| b * b / (4.0 * d))
}

/// Threshold separating trivial from nontrivial components.
pub fn nontrivial_tol(pair: &Pair, params: &SystemParams) -> f64 {
    1e-6 * pair.grid().volume().sqrt() * params.scale()
}

pub fn classify_solution(pair: &Pair, params: &SystemParams) -> SolutionFlags {
    let grid = pair.grid();
    let scale = params.scale();
    let tol = nontrivial_tol(pair, params);
    let nu = grid.power_slice(pair.u.values(), 2.0).sqrt() > tol;
    let nv = grid.power_slice(pair.v.values(), 2.0).sqrt() > tol;
    let spread = |f: &Field| f.max() - f.min();
    let constant = spread(&pair.u) < 1e-7 * scale && spread(&pair.v) < 1e-7 * scale;
    let sign_tol = 1e-8 * scale;
    let changes = |f: &Field| f.max() > sign_tol && f.min() < -sign_tol;
    let nonneg = |f: &Field| f.min() >= -sign_tol;
    let mut family = None;
    if constant {
        let (cu, cv) = (pair.u.values()[0], pair.v.values()[0]);
        'outer: for fam in constant_solutions(params) {
            let hit = match fam.kind {
                FamilyKind::Circle => ((cu * cu + cv * cv) - params.lambda1).abs() < 1e-6 * scale,
                FamilyKind::Hyperbola => ((cu * cu - cv * cv) - params.lambda1).abs() < 1e-6 * scale,
                _ => fam
                    .representatives
                    .iter()
                    .any(|(a, b)| (a - cu).abs() < 1e-6 * scale && (b - cv).abs() < 1e-6 * scale),
            };
            if hit {
                family = Some(fam.kind);
                break 'outer;
            }
        }
    }
    SolutionFlags {
        fully_nontrivial: nu && nv,
        semi_trivial: nu != nv,
        constant,
        positive: (nu || nv) && nonneg(&pair.u) && nonneg(&pair.v),
        sign_changing: changes(&pair.u) || changes(&pair.v),
        constant_family: family,
    }
}

/// The constraint matrix in its on-set form. Two-constraint mode gives
/// `[[-2|u|⁴, -2β∫u²v²], [-2β∫u²v², -2|v|⁴]]`; zero-mass mode adds the row and
/// column of the mass constraint `∫v³ + β∫u²v`.
pub fn constraint_jacobian(pair: &Pair, params: &SystemParams, mode: JacobianMode) -> Vec<Vec<f64>> {
    let grid = pair.grid();
    let (u, v) = (pair.u.values(), pair.v.values());
    let a = grid.power_slice(u, 4.0);
    let b = grid.power_slice(v, 4.0);
    let c = grid.overlap_slice(u, v);
    let beta = params.beta;
    let mut m = vec![vec![-2.0 * a, -2.0 * beta * c], vec![-2.0 * beta * c, -2.0 * b]];
    if mode == JacobianMode::ZeroMass {
        let v3: Vec<f64> = v.iter().map(|x| x * x * x).collect();
        let cube = grid.integrate_slice(&v3);
        let v2 = grid.power_slice(v, 2.0);
        let u2 = grid.power_slice(u, 2.0);
        m[0].push(2.0 * cube);
        m[1].push(-2.0 * cube);
        m.push(vec![-2.0 * cube, 2.0 * cube, 3.0 * v2 + beta * u2]);
    }
    m
}

fn determinant(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => f64::NAN,
    }
}

pub(crate) fn jacobian_check(pair: &Pair, params: &SystemParams, mode: JacobianMode) -> JacobianCheck {
    let m = constraint_jacobian(pair, params, mode);
    let det = determinant(&m);
    let rows: f64 = m.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).product();
    JacobianCheck {
        determinant: det,
        negative_definite: crate::linalg::is_negative_definite(&m),
        singular: !(det.abs() > 1e-12 * rows),
    }
}
