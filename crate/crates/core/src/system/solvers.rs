use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::descent::{descend, Descent, Problem, RestoreError, SolveOptions};
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid, Pair};
use crate::operators::{energy_slices, form_b, full_eigenbasis, residual_into, split, SpectralBasis, SystemParams};
use crate::regimes::beta_underbar;
use crate::scalar::{corner_bump, fallback, pick_best, random_smooth, solve_scalar};

use super::problems::{Base, GeneralizedProblem, NehariProblem, SymmetricProblem, ZeroMassProblem};
use super::{classify_solution, jacobian_check, JacobianMode, LowerBoundCheck, Method, SolveReport};

/// Scalar ground states used as seeds and yardsticks.
struct Grounds {
    omega1: Option<Vec<f64>>,
    omega2: Option<Vec<f64>>,
    l1: Option<f64>,
    l2: Option<f64>,
}

fn ground(lambda: f64, grid: &Arc<Grid>, opts: &SolveOptions) -> Option<(Vec<f64>, f64)> {
    let r = solve_scalar(lambda, grid, opts).ok()?;
    r.converged.then(|| (r.z.into_values(), r.level))
}

fn grounds(params: &SystemParams, grid: &Arc<Grid>, opts: &SolveOptions, want2: bool) -> Grounds {
    let g1 = ground(params.lambda1, grid, opts);
    let g2 = if !want2 {
        None
    } else if params.lambda2 == params.lambda1 {
        g1.clone()
    } else {
        ground(params.lambda2, grid, opts)
    };
    Grounds {
        l1: g1.as_ref().map(|g| g.1),
        l2: g2.as_ref().map(|g| g.1),
        omega1: g1.map(|g| g.0),
        omega2: g2.map(|g| g.0),
    }
}

fn pack(u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(u.len() + v.len());
    x.extend_from_slice(u);
    x.extend_from_slice(v);
    x
}

/// Mirror image along axis 0.
fn reflect(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let n0 = grid.nodes_per_axis()[0];
    let s0 = grid.strides()[0];
    (0..f.len())
        .map(|k| {
            let i0 = k / s0;
            f[k + (n0 - 1 - i0) * s0 - i0 * s0]
        })
        .collect()
}

/// Smooth step across the middle of axis 0.
fn step(grid: &Grid) -> Vec<f64> {
    let l0 = grid.domain().side_lengths()[0];
    grid.sample(|x| 0.5 * (1.0 + ((x[0] - 0.5 * l0) / (0.05 * l0)).tanh()))
}

fn slab_bump(grid: &Grid, center: f64, width: f64) -> Vec<f64> {
    grid.sample(|x| (-0.5 * ((x[0] - center) / width).powi(2)).exp())
}

fn positive_random(basis: &SpectralBasis, rng: &mut ChaCha8Rng) -> Vec<f64> {
    random_smooth(basis, 0, rng).into_iter().map(|v| v.abs() + 0.05).collect()
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn fallback_profile(grid: &Grid, lambda: f64) -> Vec<f64> {
    if grid.boundary() == Boundary::Neumann {
        corner_bump(grid, lambda)
    } else {
        let l = grid.domain().side_lengths().to_vec();
        grid.sample(|x| {
            x.iter()
                .zip(&l)
                .map(|(c, len)| (std::f64::consts::PI * c / len).sin())
                .product()
        })
    }
}

fn rng_for(opts: &SolveOptions, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt))
}

fn seeds(method: Method, p: &SystemParams, basis: &SpectralBasis, gr: &Grounds, opts: &SolveOptions) -> Vec<Vec<f64>> {
    let grid = basis.grid();
    let mut out = Vec::new();
    let w1 = gr.omega1.clone().unwrap_or_else(|| fallback_profile(grid, p.lambda1));
    let w2 = gr.omega2.clone().unwrap_or_else(|| fallback_profile(grid, p.lambda2));
    let chi = step(grid);
    let not_chi: Vec<f64> = chi.iter().map(|c| 1.0 - c).collect();
    let l0 = grid.domain().side_lengths()[0];
    let mut rng = rng_for(opts, 17);
    match method {
        Method::Nehari | Method::MountainPass | Method::GeneralizedNehari => {
            out.push(pack(&w1, &w2));
            out.push(pack(&w1, &reflect(grid, &w2)));
            out.push(pack(&mul(&w1, &not_chi), &mul(&w2, &chi)));
            if method != Method::GeneralizedNehari {
                out.push(pack(&vec![1.0; grid.len()], &vec![1.0; grid.len()]));
            }
            for _ in 0..opts.multistart {
                if method == Method::GeneralizedNehari {
                    let u = random_smooth(basis, 0, &mut rng);
                    let v = random_smooth(basis, 0, &mut rng);
                    out.push(pack(&u, &v));
                } else {
                    let u = positive_random(basis, &mut rng);
                    let v = positive_random(basis, &mut rng);
                    out.push(pack(&u, &v));
                }
            }
        }
        Method::ZeroMass => {
            for w in [0.1, 0.2, 0.3] {
                out.push(pack(&slab_bump(grid, 0.0, w * l0), &slab_bump(grid, l0, w * l0)));
            }
            out.push(pack(&mul(&w1, &not_chi), &chi));
            for _ in 0..opts.multistart {
                let u = positive_random(basis, &mut rng);
                let v = positive_random(basis, &mut rng);
                out.push(pack(&mul(&u, &not_chi), &mul(&v, &chi)));
            }
        }
        Method::Symmetric => {
            let parts = |z: &[f64]| {
                let zp: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
                let zm: Vec<f64> = z.iter().map(|v| (-v).max(0.0)).collect();
                pack(&zp, &zm)
            };
            if let Some(w) = &gr.omega1 {
                out.push(parts(w));
            }
            let first = usize::from(grid.boundary() == Boundary::Neumann);
            for j in first..(first + 3).min(basis.len()) {
                out.push(parts(&basis.eigenfield_values(j)));
            }
            for _ in 0..opts.multistart {
                out.push(parts(&random_smooth(basis, first, &mut rng)));
            }
        }
    }
    for s in out.iter_mut() {
        let n = grid.len();
        grid.enforce_boundary(&mut s[..n]);
        grid.enforce_boundary(&mut s[n..]);
    }
    out
}

/// Descends from every seed; an infeasible projection replaces one component
/// by a fresh positive random field and retries.
fn run_with_retries(
    p: &dyn Problem,
    seeds: Vec<Vec<f64>>,
    opts: &SolveOptions,
) -> Vec<std::result::Result<Descent, RestoreError>> {
    let basis = p.basis();
    let grid = p.grid();
    let n = grid.len();
    seeds
        .into_par_iter()
        .enumerate()
        .map(|(i, mut s)| {
            let mut attempt = 0;
            loop {
                match descend(p, s.clone(), opts) {
                    Err(RestoreError::Infeasible) if attempt < 6 => {
                        let mut rng = rng_for(opts, 1000 + 16 * i as u64 + attempt as u64);
                        let mut fresh = positive_random(basis, &mut rng);
                        grid.enforce_boundary(&mut fresh);
                        let range = if attempt % 2 == 0 { n..2 * n } else { 0..n };
                        s[range].copy_from_slice(&fresh);
                        attempt += 1;
                    }
                    r => return r,
                }
            }
        })
        .collect()
}

struct Setup {
    problem: Box<dyn Problem>,
    abs_positive: bool,
    resonant: bool,
}

fn check_method(method: Method, p: &SystemParams, grid: &Grid) -> Result<()> {
    let (l1, l2, b) = (p.lambda1, p.lambda2, p.beta);
    let ok = match method {
        Method::Nehari => l1 > 0.0 && l2 > 0.0,
        Method::MountainPass => l1 > 0.0 && l2 > 0.0 && b > 1.0,
        Method::GeneralizedNehari => true,
        Method::ZeroMass => l1 > 0.0 && l2 == 0.0 && b < 0.0 && grid.boundary() == Boundary::Neumann,
        Method::Symmetric => l1 == l2 && l1 <= 0.0 && b < 0.0,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "method {method} does not apply to (lambda1, lambda2, beta) = ({l1}, {l2}, {b}) with {:?} conditions",
            grid.boundary()
        )))
    }
}

fn setup(method: Method, params: &SystemParams, grid: &Arc<Grid>, opts: &SolveOptions) -> Result<Setup> {
    check_method(method, params, grid)?;
    let basis = full_eigenbasis(grid);
    let base = Base {
        grid: grid.clone(),
        basis: basis.clone(),
        params: *params,
        opts: opts.clone(),
    };
    let abs_positive = method == Method::Nehari && params.beta < 0.0;
    let mut resonant = false;
    let problem: Box<dyn Problem> = match method {
        Method::Nehari => Box::new(NehariProblem {
            base,
            abs_step: abs_positive,
            ray: false,
        }),
        Method::MountainPass => Box::new(NehariProblem {
            base,
            abs_step: false,
            ray: true,
        }),
        Method::GeneralizedNehari => {
            let s1 = split(&basis, params.lambda1)?;
            let s2 = split(&basis, params.lambda2)?;
            resonant = s1.is_resonant() || s2.is_resonant();
            Box::new(GeneralizedProblem { base, s1, s2 })
        }
        Method::ZeroMass => Box::new(ZeroMassProblem { base }),
        Method::Symmetric => Box::new(SymmetricProblem { base }),
    };
    Ok(Setup {
        problem,
        abs_positive,
        resonant,
    })
}

fn outside_theory(method: Method, p: &SystemParams, n: usize, gr: &Grounds) -> bool {
    let (l1, l2, b) = (p.lambda1, p.lambda2, p.beta);
    let positive = l1 > 0.0 && l2 > 0.0;
    let underbar = match (gr.l1, gr.l2) {
        (Some(a), Some(c)) if positive => beta_underbar(a, c).ok(),
        _ => None,
    };
    match method {
        Method::Nehari => !(b < 0.0 || underbar.is_some_and(|ub| b > 0.0 && b < ub)),
        Method::MountainPass => false,
        Method::GeneralizedNehari => {
            let weak = b > 0.0 && match underbar {
                Some(ub) => b < ub,
                None => !positive && b < 1.0,
            };
            let small_competitive = l1 == l2 && l1 <= 0.0 && b > -1.0 && b < 0.0;
            !(weak || small_competitive)
        }
        Method::ZeroMass => n > 3,
        Method::Symmetric => !(n <= 3 || b > -1.0),
    }
}

fn finish(
    method: Method,
    params: &SystemParams,
    grid: &Arc<Grid>,
    setup: &Setup,
    gr: &Grounds,
    runs: Vec<std::result::Result<Descent, RestoreError>>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let p = setup.problem.as_ref();
    let (idx, count) = match pick_best(p, &runs) {
        Some(b) => b,
        None => (
            fallback(&runs).ok_or_else(|| Error::InvalidParams("no seed could be projected onto the constraint set".into()))?,
            0,
        ),
    };
    let d = runs[idx].as_ref().expect("selected run succeeded");
    let n = grid.len();
    let mut u = d.x[..n].to_vec();
    let mut v = d.x[n..].to_vec();
    if !setup.abs_positive && method != Method::Symmetric {
        for f in [&mut u, &mut v] {
            let max = f.iter().copied().fold(0.0f64, f64::max);
            let min = f.iter().copied().fold(0.0f64, f64::min);
            if -min > max {
                f.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
    let mut ru = vec![0.0; n];
    let mut rv = vec![0.0; n];
    residual_into(grid, &u, &v, params, &mut ru, &mut rv);
    let residual_inf = ru.iter().chain(&rv).fold(0.0f64, |m, x| m.max(x.abs()));
    let residual_tol = opts.residual_tol * params.scale();
    let x = pack(&u, &v);
    let constraint_residuals = p.constraint_residuals(&x);
    let energy = energy_slices(grid, &u, &v, params);
    let diff: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
    let pair = Pair {
        u: crate::grid::Field::from_raw(grid.clone(), u),
        v: crate::grid::Field::from_raw(grid.clone(), v),
    };
    let flags = classify_solution(&pair, params);
    let jacobian = match method {
        Method::MountainPass => None,
        Method::ZeroMass => Some(jacobian_check(&pair, params, JacobianMode::ZeroMass)),
        _ => Some(jacobian_check(&pair, params, JacobianMode::TwoConstraint)),
    };
    let lower_bound = if method == Method::ZeroMass {
        gr.l1.map(|l| {
            let norm_sq = form_b(grid, pair.u.values(), pair.u.values(), params.lambda1);
            let bound = 4.0 * l;
            LowerBoundCheck {
                norm_sq,
                bound,
                holds: norm_sq >= bound * (1.0 - 1e-8),
            }
        })
    } else {
        None
    };
    let inner_failure = d.info.non_concave || jacobian.is_some_and(|j| j.singular);
    Ok(SolveReport {
        params: *params,
        method,
        level: method.level(),
        energy,
        residual_inf,
        residual_tol,
        constraint_residuals,
        converged: d.converged && residual_inf < residual_tol,
        iterations: d.iterations,
        polished: d.polished,
        flags,
        overlap: grid.overlap_slice(pair.u.values(), pair.v.values()),
        component_gap: grid.power_slice(&diff, 2.0).sqrt(),
        outside_theory: outside_theory(method, params, grid.dimension(), gr),
        resonant: setup.resonant || d.info.resonant,
        inner_failure,
        jacobian,
        lower_bound,
        converged_candidates: count,
        seed_index: idx,
        seed: opts.seed,
        trace: d.trace.clone(),
        pair,
    })
}

fn needs_grounds(method: Method) -> (bool, bool) {
    match method {
        Method::ZeroMass => (true, false),
        Method::Symmetric => (true, false),
        _ => (true, true),
    }
}

/// Solves with the given method from its structured and random seeds.
pub fn solve_system(params: &SystemParams, grid: &Arc<Grid>, method: Method, opts: &SolveOptions) -> Result<SolveReport> {
    let setup = setup(method, params, grid, opts)?;
    let (_, want2) = needs_grounds(method);
    let gr = grounds(params, grid, opts, want2);
    let seeds = seeds(method, params, setup.problem.basis(), &gr, opts);
    let runs = run_with_retries(setup.problem.as_ref(), seeds, opts);
    finish(method, params, grid, &setup, &gr, runs, opts)
}

/// One descent from a caller-supplied pair.
pub fn descend_system_from(pair: &Pair, params: &SystemParams, method: Method, opts: &SolveOptions) -> Result<SolveReport> {
    let grid = pair.grid().clone();
    let setup = setup(method, params, &grid, opts)?;
    let gr = Grounds {
        omega1: None,
        omega2: None,
        l1: None,
        l2: None,
    };
    let mut x = pair.to_flat();
    let n = grid.len();
    grid.enforce_boundary(&mut x[..n]);
    grid.enforce_boundary(&mut x[n..]);
    let run = descend(setup.problem.as_ref(), x, opts);
    if let Err(e) = &run {
        return Err(Error::InvalidParams(format!("seed could not be projected: {e:?}")));
    }
    finish(method, params, &grid, &setup, &gr, vec![run], opts)
}

/// Competitive (β < 0) or weakly cooperative Nehari descent for λ₁, λ₂ > 0.
pub fn solve_nehari_positive(params: &SystemParams, grid: &Arc<Grid>, opts: &SolveOptions) -> Result<SolveReport> {
    solve_system(params, grid, Method::Nehari, opts)
}

/// Ray-normalized minimization of the mountain-pass quotient for β > 1.
pub fn solve_mountain_pass(params: &SystemParams, grid: &Arc<Grid>, opts: &SolveOptions) -> Result<SolveReport> {
    solve_system(params, grid, Method::MountainPass, opts)
}

/// Nehari descent with inner maximization over `H~_1 × H~_2`.
pub fn solve_generalized_nehari(params: &SystemParams, grid: &Arc<Grid>, opts: &SolveOptions) -> Result<SolveReport> {
    solve_system(params, grid, Method::GeneralizedNehari, opts)
}

/// Descent on the three-constraint set for λ₁ > 0, λ₂ = 0, β < 0.
pub fn solve_zero_mass(params: &SystemParams, grid: &Arc<Grid>, opts: &SolveOptions) -> Result<SolveReport> {
    solve_system(params, grid, Method::ZeroMass, opts)
}

/// Positive-parts functional descent for λ₁ = λ₂ ≤ 0, β < 0.
pub fn solve_symmetric_competitive(params: &SystemParams, grid: &Arc<Grid>, opts: &SolveOptions) -> Result<SolveReport> {
    solve_system(params, grid, Method::Symmetric, opts)
}
