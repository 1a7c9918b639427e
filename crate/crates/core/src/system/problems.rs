//! Constraint plug-ins for the shared descent engine.

use std::sync::Arc;

use crate::descent::{inf_norm, Problem, RestoreError, RestoreInfo, SolveOptions};
use crate::fiber::fiber_restore;
use crate::grid::Grid;
use crate::linalg::solve_dense;
use crate::operators::{
    energy_slices, form_b, hessian_into, residual_into, PairMoments, SpectralBasis, SubspaceSplit, SystemParams,
};
use crate::scalar::shift_for;

use super::two_scaling;

pub(crate) struct Base {
    pub grid: Arc<Grid>,
    pub basis: SpectralBasis,
    pub params: SystemParams,
    pub opts: SolveOptions,
}

impl Base {
    pub fn halves<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.grid.len())
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let (u, v) = self.halves(x);
        energy_slices(&self.grid, u, v, &self.params)
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let (u, v) = self.halves(x);
        let mut out = vec![0.0; x.len()];
        let (ru, rv) = out.split_at_mut(self.grid.len());
        residual_into(&self.grid, u, v, &self.params, ru, rv);
        out
    }

    fn hessian(&self, x: &[f64], d: &[f64]) -> Vec<f64> {
        let (u, v) = self.halves(x);
        let (du, dv) = self.halves(d);
        let mut out = vec![0.0; x.len()];
        let (hu, hv) = out.split_at_mut(self.grid.len());
        hessian_into(&self.grid, u, v, du, dv, &self.params, hu, hv);
        out
    }

    fn moments(&self, x: &[f64]) -> PairMoments {
        let (u, v) = self.halves(x);
        PairMoments::compute(&self.grid, u, v, &self.params)
    }

    fn nontrivial(&self, x: &[f64]) -> bool {
        let (u, v) = self.halves(x);
        let tol = 1e-6 * self.grid.volume().sqrt() * self.params.scale();
        self.grid.power_slice(u, 2.0).sqrt() > tol && self.grid.power_slice(v, 2.0).sqrt() > tol
    }

    fn nonnegative(&self, x: &[f64]) -> bool {
        let floor = -1e-6 * self.params.scale();
        x.iter().all(|&v| v >= floor)
    }

    fn scale_pair(&self, x: Vec<f64>, t: f64, s: f64) -> Vec<f64> {
        let n = self.grid.len();
        x.into_iter()
            .enumerate()
            .map(|(k, v)| if k < n { t * v } else { s * v })
            .collect()
    }

    fn shift(&self, comp: usize) -> f64 {
        shift_for(if comp == 0 { self.params.lambda1 } else { self.params.lambda2 })
    }
}

macro_rules! common {
    () => {
        fn grid(&self) -> &Arc<Grid> {
            &self.base.grid
        }
        fn basis(&self) -> &SpectralBasis {
            &self.base.basis
        }
        fn ncomp(&self) -> usize {
            2
        }
        fn shift(&self, comp: usize) -> f64 {
            self.base.shift(comp)
        }
        fn scale(&self) -> f64 {
            self.base.params.scale()
        }
    };
}

/// Two-constraint Nehari set (or the single ray constraint of the
/// mountain-pass quotient when `ray` is set).
pub(crate) struct NehariProblem {
    pub base: Base,
    pub abs_step: bool,
    pub ray: bool,
}

impl Problem for NehariProblem {
    common!();

    fn energy(&self, x: &[f64]) -> f64 {
        self.base.energy(x)
    }
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.base.residual(x)
    }
    fn hessian(&self, x: &[f64], d: &[f64]) -> Vec<f64> {
        self.base.hessian(x, d)
    }
    fn restore(&self, x: Vec<f64>) -> Result<(Vec<f64>, RestoreInfo), RestoreError> {
        let m = self.base.moments(&x);
        let beta = self.base.params.beta;
        if self.ray {
            let b = m.bu + m.bv;
            let d = m.a + 2.0 * beta * m.c + m.b;
            if !(b > 0.0 && d > 0.0) {
                return Err(RestoreError::Infeasible);
            }
            let t = (b / d).sqrt();
            Ok((self.base.scale_pair(x, t, t), RestoreInfo::default()))
        } else {
            let (t2, s2) = two_scaling(m.bu, m.bv, m.a, m.b, m.c, beta).map_err(|_| RestoreError::Infeasible)?;
            Ok((self.base.scale_pair(x, t2.sqrt(), s2.sqrt()), RestoreInfo::default()))
        }
    }
    fn constraint_residuals(&self, x: &[f64]) -> Vec<f64> {
        let m = self.base.moments(x);
        let (g1, g2) = m.nehari(self.base.params.beta);
        if self.ray {
            vec![g1 + g2]
        } else {
            vec![g1, g2]
        }
    }
    fn post_step(&self, x: &mut [f64]) {
        if self.abs_step {
            x.iter_mut().for_each(|v| *v = v.abs());
        }
    }
    fn admissible(&self, x: &[f64]) -> bool {
        (self.ray || self.base.nontrivial(x)) && (!self.abs_step || self.base.nonnegative(x))
    }
}

/// Nehari set with the extra orthogonality to `H~_1 × H~_2`.
pub(crate) struct GeneralizedProblem {
    pub base: Base,
    pub s1: SubspaceSplit,
    pub s2: SubspaceSplit,
}

impl Problem for GeneralizedProblem {
    common!();

    fn energy(&self, x: &[f64]) -> f64 {
        self.base.energy(x)
    }
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.base.residual(x)
    }
    fn hessian(&self, x: &[f64], d: &[f64]) -> Vec<f64> {
        self.base.hessian(x, d)
    }
    fn restore(&self, x: Vec<f64>) -> Result<(Vec<f64>, RestoreInfo), RestoreError> {
        if self.s1.tilde_dim() == 0 && self.s2.tilde_dim() == 0 {
            let m = self.base.moments(&x);
            let (t2, s2) =
                two_scaling(m.bu, m.bv, m.a, m.b, m.c, self.base.params.beta).map_err(|_| RestoreError::Infeasible)?;
            return Ok((self.base.scale_pair(x, t2.sqrt(), s2.sqrt()), RestoreInfo::default()));
        }
        let o = &self.base.opts;
        fiber_restore(self, &[&self.s1, &self.s2], &x, o.inner_tol, o.inner_max_iters)
    }
    fn constraint_residuals(&self, x: &[f64]) -> Vec<f64> {
        let m = self.base.moments(x);
        let (g1, g2) = m.nehari(self.base.params.beta);
        let r = self.base.residual(x);
        let (ru, rv) = self.base.halves(&r);
        let mut out = vec![g1, g2];
        out.extend(self.s1.tilde_coefficients(ru));
        out.extend(self.s2.tilde_coefficients(rv));
        out
    }
    fn admissible(&self, x: &[f64]) -> bool {
        self.base.nontrivial(x)
    }
}

/// Nehari set intersected with the mass constraint `∫v³ + β∫u²v = λ₂∫v`.
pub(crate) struct ZeroMassProblem {
    pub base: Base,
}

impl ZeroMassProblem {
    /// `(G₁, G₂, G₃)`.
    pub fn constraints(&self, x: &[f64]) -> [f64; 3] {
        let grid = &self.base.grid;
        let (u, v) = self.base.halves(x);
        let p = &self.base.params;
        let m = PairMoments::compute(grid, u, v, p);
        let (g1, g2) = m.nehari(p.beta);
        let mut cube = 0.0;
        let mut mixed = 0.0;
        let mut mass = 0.0;
        for ((w, a), b) in grid.quad_weights().iter().zip(u).zip(v) {
            cube += w * (b * b * b);
            mixed += w * (a * a * b);
            mass += w * b;
        }
        [g1, g2, cube + p.beta * mixed - p.lambda2 * mass]
    }

    /// Derivatives of `G` along `(u,0)`, `(0,v)` and `(0,1)`.
    fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let grid = &self.base.grid;
        let (u, v) = self.base.halves(x);
        let p = &self.base.params;
        let beta = p.beta;
        let m = PairMoments::compute(grid, u, v, p);
        let (mut cube, mut mixed, mut mass, mut v2, mut u2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((w, a), b) in grid.quad_weights().iter().zip(u).zip(v) {
            cube += w * (b * b * b);
            mixed += w * (a * a * b);
            mass += w * b;
            v2 += w * (b * b);
            u2 += w * (a * a);
        }
        vec![
            vec![2.0 * m.bu - 4.0 * m.a - 2.0 * beta * m.c, -2.0 * beta * m.c, -2.0 * beta * mixed],
            vec![
                -2.0 * beta * m.c,
                2.0 * m.bv - 4.0 * m.b - 2.0 * beta * m.c,
                2.0 * p.lambda2 * mass - 4.0 * cube - 2.0 * beta * mixed,
            ],
            vec![
                2.0 * beta * mixed,
                3.0 * cube + beta * mixed - p.lambda2 * mass,
                3.0 * v2 + beta * u2 - p.lambda2 * grid.volume(),
            ],
        ]
    }

    fn moved(&self, x: &[f64], d: &[f64], theta: f64) -> Option<Vec<f64>> {
        let n = self.base.grid.len();
        let (a, b) = (1.0 + theta * d[0], 1.0 + theta * d[1]);
        if !(a > 0.0 && b > 0.0) {
            return None;
        }
        let mut y = Vec::with_capacity(x.len());
        y.extend(x[..n].iter().map(|w| a * w));
        y.extend(x[n..].iter().map(|w| b * w + theta * d[2]));
        self.base.grid.enforce_boundary(&mut y[n..]);
        Some(y)
    }
}

impl Problem for ZeroMassProblem {
    common!();

    fn energy(&self, x: &[f64]) -> f64 {
        self.base.energy(x)
    }
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.base.residual(x)
    }
    fn hessian(&self, x: &[f64], d: &[f64]) -> Vec<f64> {
        self.base.hessian(x, d)
    }
    fn restore(&self, x: Vec<f64>) -> Result<(Vec<f64>, RestoreInfo), RestoreError> {
        let grid = self.base.grid.clone();
        // a closed-form two-constraint start makes the Newton basin easy to hit
        let m = self.base.moments(&x);
        let mut x = match two_scaling(m.bu, m.bv, m.a, m.b, m.c, self.base.params.beta) {
            Ok((t2, s2)) => self.base.scale_pair(x, t2.sqrt(), s2.sqrt()),
            Err(_) => x,
        };
        let tol_of = |x: &[f64]| {
            let (u, v) = self.base.halves(x);
            self.base.opts.inner_tol * self.scale() * (1.0 + grid.power_slice(u, 2.0) + grid.power_slice(v, 2.0))
        };
        let mut g = self.constraints(&x);
        let info = RestoreInfo::default();
        let max_iters = 4 * self.base.opts.inner_max_iters;
        let mut done = false;
        for _ in 0..max_iters {
            if inf_norm(&g) <= tol_of(&x) {
                done = true;
                break;
            }
            let jac = self.jacobian(&x);
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let Some(d) = solve_dense(&jac, &rhs) else {
                return Err(RestoreError::Diverged);
            };
            let g0 = inf_norm(&g);
            let mut theta = 1.0;
            let mut next = None;
            for _ in 0..40 {
                if let Some(y) = self.moved(&x, &d, theta) {
                    let gy = self.constraints(&y);
                    if inf_norm(&gy) < g0 {
                        next = Some((y, gy));
                        break;
                    }
                }
                theta *= 0.5;
            }
            match next {
                Some((y, gy)) => {
                    x = y;
                    g = gy;
                }
                None => break,
            }
        }
        if !done && inf_norm(&g) > 1e3 * tol_of(&x) {
            return Err(RestoreError::Diverged);
        }
        if !self.base.nontrivial(&x) {
            return Err(RestoreError::Infeasible);
        }
        Ok((x, info))
    }
    fn constraint_residuals(&self, x: &[f64]) -> Vec<f64> {
        self.constraints(x).to_vec()
    }
    fn admissible(&self, x: &[f64]) -> bool {
        self.base.nontrivial(x)
    }
}

/// Positive-parts functional with `μ = λ - 1`; coincides with the system
/// energy on nonnegative pairs.
pub(crate) struct SymmetricProblem {
    pub base: Base,
}

impl SymmetricProblem {
    fn mu(&self) -> f64 {
        self.base.params.lambda1 - 1.0
    }

    /// Quadratic parts `‖u‖² + μ|u₊|²`, positive quartic masses and overlap.
    fn parts(&self, x: &[f64]) -> (f64, f64, f64, f64, f64) {
        let g = &self.base.grid;
        let (u, v) = self.base.halves(x);
        let up: Vec<f64> = u.iter().map(|a| a.max(0.0)).collect();
        let vp: Vec<f64> = v.iter().map(|a| a.max(0.0)).collect();
        let mu = self.mu();
        let qu = form_b(g, u, u, 1.0) + mu * g.power_slice(&up, 2.0);
        let qv = form_b(g, v, v, 1.0) + mu * g.power_slice(&vp, 2.0);
        (qu, qv, g.power_slice(&up, 4.0), g.power_slice(&vp, 4.0), g.overlap_slice(u, v))
    }
}

impl Problem for SymmetricProblem {
    common!();

    fn energy(&self, x: &[f64]) -> f64 {
        let (qu, qv, a, b, c) = self.parts(x);
        0.5 * (qu + qv) - 0.25 * ((a + b) + 2.0 * self.base.params.beta * c)
    }
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let g = &self.base.grid;
        let n = g.len();
        let (u, v) = self.base.halves(x);
        let mut out = vec![0.0; x.len()];
        let (ru, rv) = out.split_at_mut(n);
        crate::operators::laplacian_into(g, u, ru);
        crate::operators::laplacian_into(g, v, rv);
        let (mu, beta) = (self.mu(), self.base.params.beta);
        for k in 0..n {
            let (p, q) = (u[k], v[k]);
            let (pp, qp) = (p.max(0.0), q.max(0.0));
            ru[k] += p + mu * pp - pp * (pp * pp) - beta * (p * (q * q));
            rv[k] += q + mu * qp - qp * (qp * qp) - beta * (q * (p * p));
        }
        g.enforce_boundary(ru);
        g.enforce_boundary(rv);
        out
    }
    fn hessian(&self, x: &[f64], d: &[f64]) -> Vec<f64> {
        let g = &self.base.grid;
        let n = g.len();
        let (u, v) = self.base.halves(x);
        let (du, dv) = self.base.halves(d);
        let mut out = vec![0.0; x.len()];
        let (hu, hv) = out.split_at_mut(n);
        crate::operators::laplacian_into(g, du, hu);
        crate::operators::laplacian_into(g, dv, hv);
        let (mu, beta) = (self.mu(), self.base.params.beta);
        for k in 0..n {
            let (p, q, z, e) = (u[k], v[k], du[k], dv[k]);
            let ip = if p > 0.0 { 1.0 } else { 0.0 };
            let iq = if q > 0.0 { 1.0 } else { 0.0 };
            let cross = 2.0 * beta * (p * q);
            hu[k] += z + mu * ip * z - 3.0 * ip * (p * p) * z - beta * (q * q) * z - cross * e;
            hv[k] += e + mu * iq * e - 3.0 * iq * (q * q) * e - beta * (p * p) * e - cross * z;
        }
        g.enforce_boundary(hu);
        g.enforce_boundary(hv);
        out
    }
    fn restore(&self, x: Vec<f64>) -> Result<(Vec<f64>, RestoreInfo), RestoreError> {
        let (qu, qv, a, b, c) = self.parts(&x);
        let (t2, s2) = two_scaling(qu, qv, a, b, c, self.base.params.beta).map_err(|_| RestoreError::Infeasible)?;
        Ok((self.base.scale_pair(x, t2.sqrt(), s2.sqrt()), RestoreInfo::default()))
    }
    fn constraint_residuals(&self, x: &[f64]) -> Vec<f64> {
        let (qu, qv, a, b, c) = self.parts(x);
        let beta = self.base.params.beta;
        vec![qu - a - beta * c, qv - b - beta * c]
    }
    fn post_step(&self, x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = v.abs());
    }
    fn admissible(&self, x: &[f64]) -> bool {
        self.base.nontrivial(x) && self.base.nonnegative(x) && self.energy(x) > 0.0
    }
}
