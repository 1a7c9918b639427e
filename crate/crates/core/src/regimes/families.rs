//! Constant solutions of the system and their energies.

use serde::{Deserialize, Serialize};

use crate::grid::DomainSpec;
use crate::operators::SystemParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    SemiTrivialU,
    SemiTrivialV,
    IsolatedPair,
    /// `c₁² + c₂² = λ` at `β = 1`, `λ₁ = λ₂ > 0`.
    Circle,
    /// `c₁² - c₂² = λ₁` at `β = -1`, `λ₁ = -λ₂`.
    Hyperbola,
}

/// A family of constant solutions; `representatives` lists sample points
/// `(c₁, c₂)` (all sign choices for the discrete families).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantFamily {
    pub kind: FamilyKind,
    pub representatives: Vec<(f64, f64)>,
}

fn signs(c1: f64, c2: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for s1 in [1.0, -1.0] {
        for s2 in [1.0, -1.0] {
            let p = (s1 * c1, s2 * c2);
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

/// Enumerates every constant solution family for the given parameters.
pub fn constant_solutions(params: &SystemParams) -> Vec<ConstantFamily> {
    let SystemParams { lambda1: l1, lambda2: l2, beta } = *params;
    let mut out = Vec::new();
    if l1 >= 0.0 {
        out.push(ConstantFamily {
            kind: FamilyKind::SemiTrivialU,
            representatives: signs(l1.sqrt(), 0.0),
        });
    }
    if l2 >= 0.0 {
        out.push(ConstantFamily {
            kind: FamilyKind::SemiTrivialV,
            representatives: signs(0.0, l2.sqrt()),
        });
    }
    if beta != 1.0 && beta != -1.0 {
        let d = 1.0 - beta * beta;
        let a = (l1 - beta * l2) / d;
        let b = (l2 - beta * l1) / d;
        if a >= 0.0 && b >= 0.0 {
            out.push(ConstantFamily {
                kind: FamilyKind::IsolatedPair,
                representatives: signs(a.sqrt(), b.sqrt()),
            });
        }
    } else if beta == 1.0 && l1 == l2 && l1 > 0.0 {
        let reps = (0..8)
            .map(|k| {
                let th = k as f64 * std::f64::consts::PI / 4.0;
                (l1.sqrt() * th.cos(), l1.sqrt() * th.sin())
            })
            .collect();
        out.push(ConstantFamily {
            kind: FamilyKind::Circle,
            representatives: reps,
        });
    } else if beta == -1.0 && l1 == -l2 {
        // c₁ = ±√(λ₁ + c₂²) over a few c₂ (and symmetrically when λ₁ < 0)
        let mut reps = Vec::new();
        for c2 in [0.0, 0.5, 1.0, 2.0] {
            let c1sq = l1 + c2 * c2;
            if c1sq >= 0.0 {
                reps.extend(signs(c1sq.sqrt(), c2));
            }
        }
        out.push(ConstantFamily {
            kind: FamilyKind::Hyperbola,
            representatives: reps,
        });
    }
    out
}

/// `(λ₁² - 2βλ₁λ₂ + λ₂²)|Ω| / (4(1-β²))` when an isolated fully nontrivial
/// constant pair exists.
pub fn constant_energy(params: &SystemParams, domain: &DomainSpec) -> Option<f64> {
    let has_pair = constant_solutions(params)
        .iter()
        .any(|f| f.kind == FamilyKind::IsolatedPair && f.representatives.iter().any(|(a, b)| *a != 0.0 && *b != 0.0));
    if !has_pair {
        return None;
    }
    let SystemParams { lambda1: l1, lambda2: l2, beta } = *params;
    Some((l1 * l1 - 2.0 * beta * l1 * l2 + l2 * l2) * domain.volume() / (4.0 * (1.0 - beta * beta)))
}
