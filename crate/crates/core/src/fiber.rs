//! Inner Newton maximization over the fiber `t_i u_i^+ + w~_i`, shared by the
//! indefinite scalar solver and the generalized Nehari system solver.

use crate::descent::{inf_norm, Problem, RestoreError, RestoreInfo};
use crate::linalg::{is_negative_definite, solve_dense};
use crate::operators::SubspaceSplit;

/// Tikhonov weight added on resonant (`mu + lambda = 0`) coefficients.
pub(crate) const RESONANCE_TIKHONOV: f64 = 1e-10;

struct Var {
    comp: usize,
    dir: Vec<f64>,
    /// multiplies the H+ part; must stay positive
    scaling: bool,
    resonant: bool,
}

/// Finds the stationary point of `F(theta) = J(sum theta_a e_a)` where the
/// directions are the normalized `H+` part of each component and the `H~`
/// eigenfields of its split.
pub(crate) fn fiber_restore<P: Problem + ?Sized>(
    p: &P,
    splits: &[&SubspaceSplit],
    x: &[f64],
    tol_rel: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, RestoreInfo), RestoreError> {
    let grid = p.grid();
    let n = grid.len();
    let mut vars = Vec::new();
    let mut theta = Vec::new();
    for (i, s) in splits.iter().enumerate() {
        let xi = &x[i * n..(i + 1) * n];
        let plus = s.plus_part(xi);
        let norm = grid.inner_slice(&plus, &plus).sqrt();
        if !(norm > 1e-300) {
            return Err(RestoreError::Infeasible);
        }
        vars.push(Var {
            comp: i,
            dir: plus.iter().map(|v| v / norm).collect(),
            scaling: true,
            resonant: false,
        });
        theta.push(norm);
        let coeffs = s.tilde_coefficients(xi);
        for (j, (phi, c)) in s.tilde_fields().iter().zip(coeffs).enumerate() {
            vars.push(Var {
                comp: i,
                dir: phi.clone(),
                scaling: false,
                resonant: j >= s.minus.len(),
            });
            theta.push(c);
        }
    }
    let nv = vars.len();
    let nc = p.ncomp();
    let build = |theta: &[f64]| {
        let mut z = vec![0.0; nc * n];
        for (v, t) in vars.iter().zip(theta) {
            let zi = &mut z[v.comp * n..(v.comp + 1) * n];
            for (a, e) in zi.iter_mut().zip(&v.dir) {
                *a += t * e;
            }
        }
        z
    };
    let gradient = |z: &[f64], theta: &[f64]| {
        let r = p.residual(z);
        vars.iter()
            .zip(theta)
            .map(|(v, t)| {
                let g = grid.inner_slice(&r[v.comp * n..(v.comp + 1) * n], &v.dir);
                if v.resonant {
                    g - 2.0 * RESONANCE_TIKHONOV * t
                } else {
                    g
                }
            })
            .collect::<Vec<f64>>()
    };
    let hessian = |z: &[f64]| {
        let mut h = vec![vec![0.0; nv]; nv];
        for a in 0..nv {
            let mut e = vec![0.0; nc * n];
            let ca = vars[a].comp;
            e[ca * n..(ca + 1) * n].copy_from_slice(&vars[a].dir);
            let he = p.hessian(z, &e);
            for b in 0..nv {
                let cb = vars[b].comp;
                h[a][b] = grid.inner_slice(&he[cb * n..(cb + 1) * n], &vars[b].dir);
            }
        }
        for a in 0..nv {
            for b in 0..a {
                let m = 0.5 * (h[a][b] + h[b][a]);
                h[a][b] = m;
                h[b][a] = m;
            }
            if vars[a].resonant {
                h[a][a] -= 2.0 * RESONANCE_TIKHONOV;
            }
        }
        h
    };

    let info = RestoreInfo {
        resonant: vars.iter().any(|v| v.resonant),
        ..Default::default()
    };
    // start from the best common rescaling of the H+ parts; the energy along
    // the ray is a sigma^2 - b sigma^4 exactly
    let ray: Vec<f64> = vars.iter().zip(&theta).map(|(v, t)| if v.scaling { *t } else { 0.0 }).collect();
    let x1 = build(&ray);
    let x2: Vec<f64> = x1.iter().map(|v| 2.0 * v).collect();
    let (e1, e2) = (p.energy(&x1), p.energy(&x2));
    let b = (4.0 * e1 - e2) / 12.0;
    let a = e1 + b;
    if !(a > 0.0 && b > 0.0) {
        return Err(RestoreError::Infeasible);
    }
    let sigma = (a / (2.0 * b)).sqrt();
    for (v, t) in vars.iter().zip(theta.iter_mut()) {
        if v.scaling {
            *t *= sigma;
        }
    }
    let level0 = a * a / (4.0 * b);
    let mut z = build(&theta);
    let mut g = gradient(&z, &theta);
    let scale_of = |z: &[f64]| tol_rel * p.scale() * (1.0 + (0..nc).map(|i| grid.inner_slice(&z[i * n..(i + 1) * n], &z[i * n..(i + 1) * n])).sum::<f64>());
    let mut converged = false;
    for _ in 0..max_iters {
        if inf_norm(&g) <= scale_of(&z) {
            converged = true;
            break;
        }
        let h = hessian(&z);
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let delta = solve_dense(&h, &rhs).ok_or(RestoreError::Diverged)?;
        let g0 = inf_norm(&g);
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let cand: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + step * d).collect();
            if vars.iter().zip(&cand).all(|(v, t)| !v.scaling || *t > 0.0) {
                let zc = build(&cand);
                let gc = gradient(&zc, &cand);
                if inf_norm(&gc) < g0 {
                    theta = cand;
                    z = zc;
                    g = gc;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            // at the round-off floor a looser criterion is still meaningful
            if inf_norm(&g) <= 1e3 * scale_of(&z) {
                converged = true;
                break;
            }
            return Err(RestoreError::Diverged);
        }
    }
    if !converged {
        if inf_norm(&g) <= 1e3 * scale_of(&z) {
            converged = true;
        } else {
            return Err(RestoreError::Diverged);
        }
    }
    debug_assert!(converged);
    // the fiber maximum lies above its value on the ray; anything lower is a
    // spurious stationary point such as the origin
    if p.energy(&z) < level0 * (1.0 - 1e-9) - 1e-14 {
        return Err(RestoreError::Diverged);
    }
    let h = hessian(&z);
    let info = RestoreInfo {
        non_concave: !is_negative_definite(&h),
        ..info
    };
    Ok((z, info))
}
