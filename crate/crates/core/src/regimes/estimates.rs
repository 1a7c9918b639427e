//! Variational estimates that need a grid: the semi-triviality threshold β*
//! and the Sobolev constant of `H¹ ⊂ L⁴`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descent::SolveOptions;
use crate::error::{Error, Result};
use crate::grid::{Grid, Pair};
use crate::operators::{full_eigenbasis, laplacian_vec, PairMoments, SpectralBasis, SystemParams};
use crate::scalar::{random_smooth, shift_for, solve_scalar};

/// Outcome of the β* search. The estimate is an upper bound; only the lower
/// bound 1 is certified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaStarEstimate {
    pub estimate: f64,
    pub level: f64,
    /// Random starts that were descended.
    pub samples: usize,
    /// Every Φ value computed along the way, in evaluation order.
    pub evaluations: Vec<f64>,
    /// Φ at the symmetric pairs `(ω, ω)` built from scalar ground states.
    pub symmetric: Vec<f64>,
    pub min_sampled: f64,
    /// Every evaluation is at least `1 - 1e-8`.
    pub lower_bound_holds: bool,
}

/// `Φ(u,v) = ((4L)⁻¹ B((u,v),(u,v))² - |u|⁴ - |v|⁴) / (2∫u²v²)`, or `None`
/// when the overlap vanishes.
pub fn phi_value(pair: &Pair, params: &SystemParams, level: f64) -> Option<f64> {
    phi_slices(pair.grid(), pair.u.values(), pair.v.values(), params, level)
}

fn phi_slices(grid: &Grid, u: &[f64], v: &[f64], params: &SystemParams, level: f64) -> Option<f64> {
    let m = PairMoments::compute(grid, u, v, params);
    let bt = m.bu + m.bv;
    (m.c > 1e-14 * (m.a + m.b)).then(|| (bt * bt / (4.0 * level) - m.a - m.b) / (2.0 * m.c))
}

/// Rescales to `|u|⁴ + |v|⁴ = 1`; Φ is invariant under common scaling.
fn normalize(grid: &Grid, u: &mut [f64], v: &mut [f64]) {
    let s = (grid.power_slice(u, 4.0) + grid.power_slice(v, 4.0)).powf(-0.25);
    u.iter_mut().chain(v.iter_mut()).for_each(|x| *x *= s);
}

fn phi_gradient(grid: &Grid, u: &[f64], v: &[f64], params: &SystemParams, level: f64, phi: f64) -> (Vec<f64>, Vec<f64>) {
    let m = PairMoments::compute(grid, u, v, params);
    let bt = m.bu + m.bv;
    let d = 2.0 * m.c;
    let k = bt / level;
    let part = |f: &[f64], g: &[f64], lam: f64| -> Vec<f64> {
        let lf = laplacian_vec(grid, f);
        lf.iter()
            .zip(f)
            .zip(g)
            .map(|((l, x), y)| (k * (l + lam * x) - 4.0 * x * x * x - phi * 4.0 * x * y * y) / d)
            .collect()
    };
    (part(u, v, params.lambda1), part(v, u, params.lambda2))
}

/// Preconditioned descent of Φ from `(u, v)` with absolute values after every
/// step; returns every Φ value evaluated.
fn descend_phi(
    basis: &SpectralBasis,
    params: &SystemParams,
    level: f64,
    mut u: Vec<f64>,
    mut v: Vec<f64>,
    steps: usize,
) -> Vec<f64> {
    let grid = basis.grid();
    let mut values = Vec::new();
    normalize(grid, &mut u, &mut v);
    let Some(mut phi) = phi_slices(grid, &u, &v, params, level) else {
        return values;
    };
    values.push(phi);
    let (s1, s2) = (shift_for(params.lambda1), shift_for(params.lambda2));
    let mut tau = 1.0;
    for _ in 0..steps {
        let (gu, gv) = phi_gradient(grid, &u, &v, params, level, phi);
        let pu = basis.precondition_slice(&gu, s1);
        let pv = basis.precondition_slice(&gv, s2);
        let slope = grid.inner_slice(&gu, &pu) + grid.inner_slice(&gv, &pv);
        if !(slope > 1e-30) {
            break;
        }
        let mut accepted = false;
        for _ in 0..30 {
            let mut nu: Vec<f64> = u.iter().zip(&pu).map(|(a, b)| (a - tau * b).abs()).collect();
            let mut nv: Vec<f64> = v.iter().zip(&pv).map(|(a, b)| (a - tau * b).abs()).collect();
            grid.enforce_boundary(&mut nu);
            grid.enforce_boundary(&mut nv);
            normalize(grid, &mut nu, &mut nv);
            let trial = phi_slices(grid, &nu, &nv, params, level);
            if let Some(t) = trial {
                values.push(t);
                if t <= phi - 1e-4 * tau * slope {
                    (u, v, phi) = (nu, nv, t);
                    accepted = true;
                    break;
                }
            }
            tau *= 0.5;
        }
        if !accepted {
            break;
        }
        tau = (2.0 * tau).min(64.0);
    }
    values
}

/// Multistart descent of Φ over positive pairs with overlap, plus the
/// symmetric pairs `(ω_i, ω_i)`. `level` is `min{L_{λ₁}, L_{λ₂}}`.
pub fn beta_star_estimate(
    params: &SystemParams,
    grid: &Arc<Grid>,
    level: f64,
    samples: usize,
    opts: &SolveOptions,
) -> Result<BetaStarEstimate> {
    if !(params.lambda1 > 0.0 && params.lambda2 > 0.0) {
        return Err(Error::InvalidParams("beta* estimate needs lambda1, lambda2 > 0".into()));
    }
    if !(level > 0.0) {
        return Err(Error::InvalidParams(format!("level must be positive, got {level}")));
    }
    let basis = full_eigenbasis(grid);
    let steps = 8;

    let mut lambdas = vec![params.lambda1];
    if params.lambda2 != params.lambda1 {
        lambdas.push(params.lambda2);
    }
    let mut symmetric = Vec::new();
    for lam in lambdas {
        let w = solve_scalar(lam, grid, opts)?.z.into_values();
        if let Some(p) = phi_slices(grid, &w, &w, params, level) {
            symmetric.push(p);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<(Vec<f64>, Vec<f64>)> = (0..samples)
        .map(|_| {
            let mut pos = |off: f64| -> Vec<f64> {
                let mut f: Vec<f64> = random_smooth(&basis, 0, &mut rng).iter().map(|x| x.abs() + off).collect();
                grid.enforce_boundary(&mut f);
                f
            };
            let u = pos(0.1);
            let v = pos(0.1);
            (u, v)
        })
        .collect();
    let runs: Vec<Vec<f64>> = starts
        .into_par_iter()
        .map(|(u, v)| descend_phi(&basis, params, level, u, v, steps))
        .collect();
    let evaluations: Vec<f64> = runs.into_iter().flatten().collect();
    if evaluations.is_empty() && symmetric.is_empty() {
        return Err(Error::Sampling("every sampled pair has vanishing overlap".into()));
    }
    let min_sampled = evaluations.iter().copied().fold(f64::INFINITY, f64::min);
    let estimate = symmetric.iter().copied().fold(min_sampled, f64::min);
    let lower_bound_holds = evaluations.iter().chain(&symmetric).all(|&p| p >= 1.0 - 1e-8);
    Ok(BetaStarEstimate {
        estimate,
        level,
        samples,
        evaluations,
        symmetric,
        min_sampled,
        lower_bound_holds,
    })
}

/// Discrete `C_S = inf (|∇u|² + |u|²)/|u|₄²`, obtained as `2√L₁` from the
/// scalar solver at λ = 1. Like every level here it is an upper bound taken
/// from the best candidate found.
pub fn sobolev_constant_cs(grid: &Arc<Grid>, opts: &SolveOptions) -> Result<f64> {
    let r = solve_scalar(1.0, grid, opts)?;
    Ok(2.0 * r.level.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, DomainSpec};
    use approx::assert_relative_eq;

    fn grid(n: usize, len: f64, bc: Boundary) -> Arc<Grid> {
        Grid::new(DomainSpec::new(vec![len], bc).unwrap(), &[n]).unwrap()
    }

    #[test]
    fn symmetric_pair_gives_one() {
        let g = grid(129, 1.0, Boundary::Neumann);
        let p = SystemParams::new(2.0, 2.0, 0.0).unwrap();
        let opts = SolveOptions::default();
        let l = solve_scalar(2.0, &g, &opts).unwrap().level;
        let r = beta_star_estimate(&p, &g, l, 6, &opts).unwrap();
        assert!(r.lower_bound_holds, "{:?}", r.min_sampled);
        assert_relative_eq!(r.estimate, 1.0, epsilon = 1e-4);
        assert!(r.evaluations.len() >= 6);
    }

    #[test]
    fn disjoint_pair_has_no_phi() {
        let g = grid(33, 1.0, Boundary::Neumann);
        let u = crate::grid::Field::from_fn(&g, |x| if x[0] < 0.4 { 1.0 } else { 0.0 }).unwrap();
        let v = crate::grid::Field::from_fn(&g, |x| if x[0] > 0.6 { 1.0 } else { 0.0 }).unwrap();
        let p = SystemParams::new(1.0, 1.0, 0.0).unwrap();
        assert!(phi_value(&Pair::new(u, v).unwrap(), &p, 0.25).is_none());
    }

    #[test]
    fn sobolev_constant_bounds() {
        let opts = SolveOptions::default();
        // constants are admissible, so C_S ≤ |Ω|^{1/2}
        for len in [1.0, 4.0] {
            let cs = sobolev_constant_cs(&grid(65, len, Boundary::Neumann), &opts).unwrap();
            assert!(cs > 0.0 && cs <= len.sqrt() * (1.0 + 1e-12), "{len}: {cs}");
        }
        let cs: Vec<f64> = [33, 65, 129]
            .iter()
            .map(|&n| sobolev_constant_cs(&grid(n, 4.0, Boundary::Neumann), &opts).unwrap())
            .collect();
        assert!(cs[1] <= cs[0] + 1e-3 && cs[2] <= cs[1] + 1e-3, "{cs:?}");
    }
}
