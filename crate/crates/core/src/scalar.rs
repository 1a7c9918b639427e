//! Least-energy solutions of the scalar equation `-Δz + λz = z³`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::descent::{descend, run_seeds, Descent, Problem, RestoreError, RestoreInfo, SolveOptions};
use crate::error::{Error, Result};
use crate::fiber::fiber_restore;
use crate::grid::{Boundary, Field, Grid};
use crate::operators::{
    form_b, full_eigenbasis, scalar_energy_slice, scalar_hessian_into, scalar_residual_into, split,
    SpectralBasis, SubspaceSplit,
};
use crate::regimes::constants::{constants_kqkm, sobolev_s};

/// Closed-form yardsticks the level is compared against.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalarComparisons {
    /// `λ²|Ω|/4`, the energy of the constant solution (Neumann, λ > 0).
    pub constant_energy: Option<f64>,
    /// `M λ^{(4-N)/2}` for λ > 0.
    pub m_bound: Option<f64>,
    /// `S²/8` in dimension four.
    pub critical_bound: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalarReport {
    #[serde(skip)]
    pub z: Field,
    pub lambda: f64,
    /// Best level found; an upper bound for the least energy level.
    pub level: f64,
    pub residual_inf: f64,
    pub converged: bool,
    pub iterations: usize,
    /// The final point came from the Newton polish.
    pub polished: bool,
    pub definite: bool,
    pub is_constant: bool,
    pub sign_changing: bool,
    /// The split hit `mu_k + lambda = 0` and the Tikhonov term was active.
    pub resonant: bool,
    /// The inner maximization ended at a point that is not a strict maximum.
    pub inner_failure: bool,
    pub converged_candidates: usize,
    pub seed_index: usize,
    pub seed: u64,
    pub comparisons: ScalarComparisons,
}

/// Preconditioner shift for a component with parameter `lambda`.
pub(crate) fn shift_for(lambda: f64) -> f64 {
    if lambda > 0.0 {
        lambda.max(1.0)
    } else {
        1.0 + lambda.abs()
    }
}

pub(crate) struct ScalarProblem {
    grid: Arc<Grid>,
    basis: SpectralBasis,
    lambda: f64,
    split: SubspaceSplit,
    opts: SolveOptions,
}

impl ScalarProblem {
    pub(crate) fn new(grid: &Arc<Grid>, basis: SpectralBasis, lambda: f64, opts: &SolveOptions) -> Result<Self> {
        let split = split(&basis, lambda)?;
        Ok(ScalarProblem {
            grid: grid.clone(),
            basis,
            lambda,
            split,
            opts: opts.clone(),
        })
    }

    fn definite(&self) -> bool {
        self.split.tilde_dim() == 0
    }
}

impl Problem for ScalarProblem {
    fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    fn basis(&self) -> &SpectralBasis {
        &self.basis
    }
    fn ncomp(&self) -> usize {
        1
    }
    fn shift(&self, _comp: usize) -> f64 {
        shift_for(self.lambda)
    }
    fn scale(&self) -> f64 {
        1.0 + self.lambda.abs()
    }
    fn energy(&self, x: &[f64]) -> f64 {
        scalar_energy_slice(&self.grid, x, self.lambda)
    }
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        scalar_residual_into(&self.grid, x, self.lambda, &mut out);
        out
    }
    fn hessian(&self, x: &[f64], d: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        scalar_hessian_into(&self.grid, x, self.lambda, d, &mut out);
        out
    }
    fn restore(&self, x: Vec<f64>) -> std::result::Result<(Vec<f64>, RestoreInfo), RestoreError> {
        if self.definite() {
            let t2 = nehari_t2(&self.grid, &x, self.lambda).ok_or(RestoreError::Infeasible)?;
            let t = t2.sqrt();
            Ok((x.iter().map(|v| t * v).collect(), RestoreInfo::default()))
        } else {
            fiber_restore(
                self,
                &[&self.split],
                &x,
                self.opts.inner_tol,
                self.opts.inner_max_iters,
            )
        }
    }
    fn constraint_residuals(&self, x: &[f64]) -> Vec<f64> {
        let r = self.residual(x);
        let mut out = vec![self.grid.inner_slice(&r, x)];
        out.extend(self.split.tilde_coefficients(&r));
        out
    }
    fn admissible(&self, x: &[f64]) -> bool {
        self.grid.power_slice(x, 2.0).sqrt() > nontrivial_tol(&self.grid, self.scale())
    }
}

pub(crate) fn nontrivial_tol(grid: &Grid, scale: f64) -> f64 {
    1e-6 * grid.volume().sqrt() * scale
}

fn nehari_t2(grid: &Grid, z: &[f64], lambda: f64) -> Option<f64> {
    let b = form_b(grid, z, z, lambda);
    let q = grid.power_slice(z, 4.0);
    if b > 0.0 && q > 0.0 {
        Some(b / q)
    } else {
        None
    }
}

/// Rescales `z` onto the scalar Nehari set: `t² = B(z,z,λ)/|z|₄⁴`.
pub fn scalar_nehari_project(z: &Field, lambda: f64) -> Result<Field> {
    let b = form_b(z.grid(), z.values(), z.values(), lambda);
    let t2 = nehari_t2(z.grid(), z.values(), lambda).ok_or(Error::NotInCone(b))?;
    Ok(z.scaled(t2.sqrt()))
}

pub(crate) fn random_smooth(basis: &SpectralBasis, skip: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let modes = (basis.len() - skip).min(12);
    let mut c = vec![0.0; basis.grid().len()];
    for j in skip..skip + modes {
        let a: f64 = rng.gen_range(-1.0..1.0) / (1.0 + (j - skip) as f64);
        let phi = basis.eigenfield_values(j);
        for (x, p) in c.iter_mut().zip(&phi) {
            *x += a * p;
        }
    }
    c
}

/// Gaussian bump at the origin corner with width `1/sqrt(1+|lambda|)`.
pub(crate) fn corner_bump(grid: &Grid, lambda: f64) -> Vec<f64> {
    let k = 1.0 + lambda.abs();
    grid.sample(|x| (-0.5 * k * x.iter().map(|c| c * c).sum::<f64>()).exp())
}

pub(crate) fn scalar_seeds(basis: &SpectralBasis, split: &SubspaceSplit, lambda: f64, opts: &SolveOptions) -> Vec<Vec<f64>> {
    let grid = basis.grid();
    let mut seeds = Vec::new();
    let first_plus = split.tilde_dim();
    let neumann = grid.boundary() == Boundary::Neumann;
    if first_plus == 0 && neumann {
        seeds.push(vec![1.0; grid.len()]);
    }
    let start = if first_plus == 0 && neumann { 1 } else { first_plus };
    for j in start..(start + 3).min(basis.len()) {
        seeds.push(basis.eigenfield_values(j));
    }
    if neumann {
        let mut bump = corner_bump(grid, lambda);
        if first_plus > 0 {
            bump = split.plus_part(&bump);
        }
        seeds.push(bump);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.multistart {
        seeds.push(random_smooth(basis, first_plus, &mut rng));
    }
    seeds
}

/// Picks the lowest-energy converged admissible run; ties broken by seed order.
pub(crate) fn pick_best<P: Problem + ?Sized>(
    p: &P,
    runs: &[std::result::Result<Descent, RestoreError>],
) -> Option<(usize, usize)> {
    let mut best: Option<(usize, f64)> = None;
    let mut count = 0;
    for (i, r) in runs.iter().enumerate() {
        if let Ok(d) = r {
            if d.converged && p.admissible(&d.x) {
                count += 1;
                if best.map_or(true, |(_, e)| d.energy < e) {
                    best = Some((i, d.energy));
                }
            }
        }
    }
    best.map(|(i, _)| (i, count))
}

/// Run with the smallest residual when nothing converged.
pub(crate) fn fallback(runs: &[std::result::Result<Descent, RestoreError>]) -> Option<usize> {
    runs.iter()
        .enumerate()
        .filter_map(|(i, r)| r.as_ref().ok().map(|d| (i, d.residual_inf)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

fn comparisons(grid: &Grid, lambda: f64) -> ScalarComparisons {
    let n = grid.dimension();
    let positive = lambda > 0.0;
    ScalarComparisons {
        constant_energy: (positive && grid.boundary() == Boundary::Neumann)
            .then(|| lambda * lambda * grid.volume() / 4.0),
        m_bound: positive.then(|| {
            constants_kqkm(n).expect("dimension checked by grid").m * lambda.powf((4.0 - n as f64) / 2.0)
        }),
        critical_bound: (n == 4).then(|| sobolev_s().powi(2) / 8.0),
    }
}

fn solve_with(problem: &ScalarProblem, opts: &SolveOptions, seeds: Vec<Vec<f64>>) -> Result<ScalarReport> {
    let grid = problem.grid.clone();
    let definite = problem.definite();
    let runs = run_seeds(problem, seeds, opts);
    let picked = pick_best(problem, &runs);
    let (idx, count) = match picked {
        Some(p) => p,
        None => (
            fallback(&runs).ok_or_else(|| {
                Error::InvalidParams("no seed could be projected onto the constraint set".into())
            })?,
            0,
        ),
    };
    let d = runs[idx].as_ref().expect("picked run succeeded");
    let mut z = d.x.clone();
    if definite && z.iter().copied().fold(f64::NEG_INFINITY, f64::max) <= 0.0 {
        z.iter_mut().for_each(|v| *v = -*v);
    }
    let scale = problem.scale();
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = z.iter().copied().fold(f64::INFINITY, f64::min);
    let level = scalar_energy_slice(&grid, &z, problem.lambda);
    let sign_tol = 1e-8 * scale;
    let inner_failure = runs.iter().any(|r| matches!(r, Ok(d) if d.info.non_concave)) || d.info.non_concave;
    Ok(ScalarReport {
        lambda: problem.lambda,
        level,
        residual_inf: d.residual_inf,
        converged: d.converged,
        iterations: d.iterations,
        polished: d.polished,
        definite,
        is_constant: max - min < 1e-7 * scale,
        sign_changing: max > sign_tol && min < -sign_tol,
        resonant: problem.split.is_resonant(),
        inner_failure,
        converged_candidates: count,
        seed_index: idx,
        seed: opts.seed,
        comparisons: comparisons(&grid, problem.lambda),
        z: Field::from_raw(grid, z),
    })
}

/// Multistart Nehari-projected Sobolev descent for the definite case.
pub fn solve_scalar_definite(lambda: f64, grid: &Arc<Grid>, opts: &SolveOptions) -> Result<ScalarReport> {
    let basis = full_eigenbasis(grid);
    let problem = ScalarProblem::new(grid, basis, lambda, opts)?;
    if !problem.definite() {
        return Err(Error::InvalidParams(format!(
            "lambda = {lambda} does not make B positive definite on this grid"
        )));
    }
    let seeds = scalar_seeds(&problem.basis, &problem.split, lambda, opts);
    solve_with(&problem, opts, seeds)
}

/// Inf-sup descent over `H+` directions with inner maximization over the
/// fiber `t u + w~`.
pub fn solve_scalar_indefinite(lambda: f64, grid: &Arc<Grid>, opts: &SolveOptions) -> Result<ScalarReport> {
    if lambda > 0.0 {
        return Err(Error::InvalidParams(format!(
            "indefinite solver needs lambda <= 0, got {lambda}"
        )));
    }
    let basis = full_eigenbasis(grid);
    let problem = ScalarProblem::new(grid, basis, lambda, opts)?;
    let seeds = scalar_seeds(&problem.basis, &problem.split, lambda, opts);
    solve_with(&problem, opts, seeds)
}

/// Dispatches on the sign structure of `B(., ., lambda)`.
pub fn solve_scalar(lambda: f64, grid: &Arc<Grid>, opts: &SolveOptions) -> Result<ScalarReport> {
    let basis = full_eigenbasis(grid);
    let problem = ScalarProblem::new(grid, basis, lambda, opts)?;
    let seeds = scalar_seeds(&problem.basis, &problem.split, lambda, opts);
    solve_with(&problem, opts, seeds)
}

/// Single descent from a caller-supplied seed.
pub fn descend_scalar_from(z0: &Field, lambda: f64, opts: &SolveOptions) -> Result<ScalarReport> {
    let grid = z0.grid().clone();
    let problem = ScalarProblem::new(&grid, full_eigenbasis(&grid), lambda, opts)?;
    let mut x = z0.values().to_vec();
    grid.enforce_boundary(&mut x);
    let d = descend(&problem, x, opts).map_err(|e| Error::InvalidParams(format!("seed rejected: {e:?}")))?;
    solve_with(&problem, opts, vec![d.x])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainSpec;
    use crate::operators::{bilinear_b, scalar_energy};
    use approx::assert_relative_eq;

    fn grid1(n: usize, bc: Boundary) -> Arc<Grid> {
        Grid::new(DomainSpec::unit(1, bc).unwrap(), &[n]).unwrap()
    }

    #[test]
    fn nehari_projection_of_constant() {
        let g = grid1(33, Boundary::Neumann);
        let w = scalar_nehari_project(&Field::constant(&g, 1.0), 3.0).unwrap();
        for v in w.values() {
            assert_relative_eq!(*v, 3f64.sqrt(), max_relative = 1e-14);
        }
        let again = scalar_nehari_project(&w, 3.0).unwrap();
        assert_relative_eq!(again.values()[0], w.values()[0], max_relative = 1e-14);
        assert!(matches!(
            scalar_nehari_project(&Field::constant(&g, 1.0), -1.0),
            Err(Error::NotInCone(_))
        ));
    }

    #[test]
    fn small_lambda_gives_constant() {
        let g = grid1(65, Boundary::Neumann);
        let r = solve_scalar_definite(1.0, &g, &SolveOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.is_constant);
        assert_relative_eq!(r.level, 0.25, max_relative = 1e-10);
    }

    #[test]
    fn definite_candidate_is_on_nehari_set() {
        let g = grid1(129, Boundary::Neumann);
        let r = solve_scalar_definite(30.0, &g, &SolveOptions::default()).unwrap();
        assert!(r.converged, "{r:?}");
        let b = bilinear_b(&r.z, &r.z, 30.0).unwrap();
        let q = g.power_slice(r.z.values(), 4.0);
        assert_relative_eq!(b, q, max_relative = 1e-8);
        assert_relative_eq!(r.level, 0.25 * b, max_relative = 1e-8);
        assert!(r.level < 30.0 * 30.0 / 4.0);
        assert!(r.z.max() > 0.0);
    }

    #[test]
    fn zero_lambda_is_sign_changing_with_balanced_cube() {
        let g = grid1(129, Boundary::Neumann);
        let r = solve_scalar_indefinite(0.0, &g, &SolveOptions::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.sign_changing, "{r:?} {} {}", r.z.min(), r.z.max());
        let cube: f64 = g.integrate_slice(&r.z.values().iter().map(|v| v * v * v).collect::<Vec<_>>());
        assert!(cube.abs() < 1e-8);
        assert!(r.level > 0.0);
    }

    #[test]
    fn between_eigenvalues() {
        let g = grid1(129, Boundary::Neumann);
        let basis = full_eigenbasis(&g);
        let lam = -basis.eigenvalue(1) / 2.0;
        let s = split(&basis, lam).unwrap();
        assert_eq!(s.tilde_dim(), 1);
        let r = solve_scalar_indefinite(lam, &g, &SolveOptions::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.residual_inf < 1e-8 * (1.0 + lam.abs()));
        // stationarity along random smooth directions
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let res = crate::operators::scalar_residual(&r.z, lam);
        for _ in 0..20 {
            let d = random_smooth(&basis, 0, &mut rng);
            let dn = g.inner_slice(&d, &d).sqrt();
            assert!(g.inner_slice(res.values(), &d).abs() <= 1e-8 * (1.0 + lam.abs()) * dn * 2.0);
        }
    }

    #[test]
    fn dirichlet_level_dominates_neumann() {
        let opts = SolveOptions::default();
        let gn = grid1(129, Boundary::Neumann);
        let gd = grid1(129, Boundary::Dirichlet);
        let n = solve_scalar(10.0, &gn, &opts).unwrap();
        let d = solve_scalar(10.0, &gd, &opts).unwrap();
        assert!(n.converged && d.converged);
        assert!(d.level >= n.level);
        assert!(d.z.values()[0] == 0.0);
        assert_relative_eq!(scalar_energy(&d.z, 10.0), d.level, max_relative = 1e-14);
    }
}
