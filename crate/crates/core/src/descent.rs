//! The shared descent engine: a Sobolev-gradient step, constraint
//! restoration through a problem-specific plug-in, Armijo backtracking and a
//! final Newton polish on the full residual.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::linalg::gmres;
use crate::operators::SpectralBasis;

/// Knobs shared by the scalar and system solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub max_outer_iters: usize,
    /// Residual tolerance, multiplied by `1 + max |lambda_i|`.
    pub residual_tol: f64,
    /// Step reduction factor of the backtracking search.
    pub armijo_factor: f64,
    /// Sufficient-decrease constant of the Armijo rule.
    pub sufficient_decrease: f64,
    pub initial_step: f64,
    pub max_step: f64,
    /// Newton polish starts once the residual drops below this (relative).
    pub newton_trigger: f64,
    pub newton_max_iters: usize,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    /// Number of seeded random starts on top of the structured seeds.
    pub multistart: usize,
    pub seed: u64,
    /// Record every projection of the descent.
    pub trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_outer_iters: 3000,
            residual_tol: 1e-8,
            armijo_factor: 0.5,
            sufficient_decrease: 1e-4,
            initial_step: 1.0,
            max_step: 64.0,
            newton_trigger: 1e-3,
            newton_max_iters: 40,
            inner_tol: 1e-12,
            inner_max_iters: 50,
            multistart: 4,
            seed: 0,
            trace: false,
        }
    }
}

pub type ScalarSolveOptions = SolveOptions;

/// One logged projection.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub energy: f64,
    pub constraint_residuals: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum RestoreError {
    /// Scaling equations have no positive solution.
    Infeasible,
    /// Inner iteration failed to converge.
    Diverged,
}

/// Side information from a successful restoration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) struct RestoreInfo {
    pub resonant: bool,
    pub non_concave: bool,
    pub singular: bool,
}

impl RestoreInfo {
    fn merge(&mut self, other: RestoreInfo) {
        self.resonant |= other.resonant;
        self.non_concave |= other.non_concave;
        self.singular |= other.singular;
    }
}

/// A constrained critical-point problem over `ncomp` nodal components stored
/// back to back in one flat vector.
pub(crate) trait Problem: Sync {
    fn grid(&self) -> &Arc<Grid>;
    fn basis(&self) -> &SpectralBasis;
    fn ncomp(&self) -> usize;
    fn shift(&self, comp: usize) -> f64;
    fn scale(&self) -> f64;
    fn energy(&self, x: &[f64]) -> f64;
    fn residual(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64], d: &[f64]) -> Vec<f64>;
    fn restore(&self, x: Vec<f64>) -> Result<(Vec<f64>, RestoreInfo), RestoreError>;
    fn constraint_residuals(&self, x: &[f64]) -> Vec<f64>;
    fn post_step(&self, _x: &mut [f64]) {}
    /// Structural requirements a Newton-polished point must keep.
    fn admissible(&self, _x: &[f64]) -> bool {
        true
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Descent {
    pub x: Vec<f64>,
    pub energy: f64,
    pub residual_inf: f64,
    pub iterations: usize,
    pub converged: bool,
    pub polished: bool,
    pub info: RestoreInfo,
    pub trace: Vec<TraceEntry>,
}

pub(crate) fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn weighted_dot(grid: &Grid, ncomp: usize, a: &[f64], b: &[f64]) -> f64 {
    let n = grid.len();
    (0..ncomp)
        .map(|i| grid.inner_slice(&a[i * n..(i + 1) * n], &b[i * n..(i + 1) * n]))
        .sum()
}

fn precondition_all<P: Problem + ?Sized>(p: &P, r: &[f64]) -> Vec<f64> {
    let n = p.grid().len();
    let mut out = Vec::with_capacity(r.len());
    for i in 0..p.ncomp() {
        out.extend(p.basis().precondition_slice(&r[i * n..(i + 1) * n], p.shift(i)));
    }
    out
}

/// Runs projected descent from `x0`.
pub(crate) fn descend<P: Problem + ?Sized>(
    p: &P,
    x0: Vec<f64>,
    opts: &SolveOptions,
) -> Result<Descent, RestoreError> {
    let tol = opts.residual_tol * p.scale();
    let mut trace = Vec::new();
    let (mut x, mut info) = p.restore(x0)?;
    let mut energy = p.energy(&x);
    if opts.trace {
        trace.push(TraceEntry {
            iteration: 0,
            energy,
            constraint_residuals: p.constraint_residuals(&x),
        });
    }
    let mut alpha = opts.initial_step;
    let mut trigger = opts.newton_trigger * p.scale();
    let mut iterations = 0;
    let mut polished = false;
    let mut r = p.residual(&x);
    let mut res = inf_norm(&r);

    while res >= tol && iterations < opts.max_outer_iters {
        iterations += 1;
        if res < trigger {
            match newton_polish(p, &x, energy, opts) {
                Some(y) => {
                    x = y;
                    energy = p.energy(&x);
                    r = p.residual(&x);
                    res = inf_norm(&r);
                    polished = true;
                    break;
                }
                None => trigger *= 0.1,
            }
        }

        let g = precondition_all(p, &r);
        let slope = weighted_dot(p.grid(), p.ncomp(), &r, &g);
        if !(slope > 0.0) {
            break;
        }
        let mut accepted = None;
        while alpha >= 1e-14 {
            let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
            p.post_step(&mut y);
            if let Ok((y, yi)) = p.restore(y) {
                let ey = p.energy(&y);
                if opts.trace {
                    trace.push(TraceEntry {
                        iteration: iterations,
                        energy: ey,
                        constraint_residuals: p.constraint_residuals(&y),
                    });
                }
                if ey <= energy - opts.sufficient_decrease * alpha * slope {
                    accepted = Some((y, yi, ey));
                    break;
                }
            }
            alpha *= opts.armijo_factor;
        }
        match accepted {
            Some((y, yi, ey)) => {
                x = y;
                info.merge(yi);
                energy = ey;
                alpha = (alpha / opts.armijo_factor).min(opts.max_step);
                r = p.residual(&x);
                res = inf_norm(&r);
            }
            None => {
                // stalled: the only way forward is a direct Newton attempt
                if let Some(y) = newton_polish(p, &x, energy, opts) {
                    x = y;
                    energy = p.energy(&x);
                    r = p.residual(&x);
                    res = inf_norm(&r);
                    polished = true;
                }
                break;
            }
        }
    }

    Ok(Descent {
        converged: res < tol,
        x,
        energy,
        residual_inf: res,
        iterations,
        polished,
        info,
        trace,
    })
}

/// Damped Newton on the full residual with GMRES inner solves. Returns the
/// polished point only if it converged, stayed admissible and did not raise
/// the energy.
pub(crate) fn newton_polish<P: Problem + ?Sized>(
    p: &P,
    x: &[f64],
    energy: f64,
    opts: &SolveOptions,
) -> Option<Vec<f64>> {
    let tol = opts.residual_tol * p.scale();
    let grid = p.grid().clone();
    let nc = p.ncomp();
    let wnorm = |v: &[f64]| weighted_dot(&grid, nc, v, v).sqrt();
    let mut y = x.to_vec();
    let mut r = p.residual(&y);
    for _ in 0..opts.newton_max_iters {
        if inf_norm(&r) < tol {
            break;
        }
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let sol = gmres(
            |d| p.hessian(&y, d),
            |v| precondition_all(p, v),
            |a, b| weighted_dot(&grid, nc, a, b),
            &rhs,
            80,
            800,
            1e-11,
        );
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let r0 = wnorm(&r);
        let mut theta = 1.0;
        let mut next = None;
        for _ in 0..12 {
            let z: Vec<f64> = y.iter().zip(&sol).map(|(a, d)| a + theta * d).collect();
            let rz = p.residual(&z);
            if wnorm(&rz) < (1.0 - 1e-4 * theta) * r0 {
                next = Some((z, rz));
                break;
            }
            theta *= 0.5;
        }
        let (z, rz) = next?;
        y = z;
        r = rz;
    }
    if inf_norm(&r) >= tol || !p.admissible(&y) {
        return None;
    }
    let e = p.energy(&y);
    if e > energy + 1e-6 * (1.0 + energy.abs()) {
        return None;
    }
    Some(y)
}

/// Runs `descend` from each seed in parallel, keeping input order.
pub(crate) fn run_seeds<P: Problem + ?Sized>(
    p: &P,
    seeds: Vec<Vec<f64>>,
    opts: &SolveOptions,
) -> Vec<Result<Descent, RestoreError>> {
    seeds.into_par_iter().map(|s| descend(p, s, opts)).collect()
}
