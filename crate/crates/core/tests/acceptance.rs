//! End-to-end acceptance checks. Every criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::sync::Arc;

use groundstate_core::batch::sweep_csv;
use groundstate_core::batch::verify::{bubble_ladder, gradient_check, l2_log_ratio_bound, l2_ratio_spread, tent_ladders};
use groundstate_core::operators::SystemParams;
use groundstate_core::regimes::{
    beta_star_estimate, check_conditions, constant_energy, constant_solutions, constants_kqkm, fit_exponents,
    k_q_quadrature, ConditionFlags, ConditionInputs, FamilyKind,
};
use groundstate_core::{
    bilinear_b, energy, residual, run_sweep, solve_scalar, solve_system, Boundary, DomainSpec, Field, Grid, Method,
    MethodSelector, Pair, RunConfig, SolveOptions, SweepResult,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn p(a: f64, b: f64, c: f64) -> SystemParams {
    SystemParams::new(a, b, c).unwrap()
}

fn grid(dims: &[usize], lengths: &[f64]) -> Arc<Grid> {
    Grid::new(DomainSpec::new(lengths.to_vec(), Boundary::Neumann).unwrap(), dims).unwrap()
}

fn max_residual(pair: &Pair, params: &SystemParams) -> f64 {
    let r = residual(pair, params);
    r.u.max_abs().max(r.v.max_abs())
}

fn sweep(nodes: usize, lambdas: &[f64], betas: &[f64], trace: bool) -> SweepResult {
    let mut c = RunConfig::single(
        DomainSpec::unit(1, Boundary::Neumann).unwrap(),
        vec![nodes],
        p(lambdas[0], lambdas[0], betas[0]),
        MethodSelector::Auto,
    );
    c.lambda1 = lambdas.to_vec();
    c.lambda2 = lambdas.to_vec();
    c.beta = betas.to_vec();
    c.solve.trace = trace;
    // keep only the diagonal λ₁ = λ₂ rows by construction: single-λ lists
    assert_eq!(lambdas.len(), 1);
    run_sweep(&c).unwrap()
}

fn constant_solutions_are_exact() -> Outcome {
    // 20 tuples over all branches: semi-trivial only, isolated pairs with
    // β < -1, -1 < β < 1, β > 1, both circle and hyperbola degeneracies,
    // zero and negative masses
    let tuples = [
        (2.0, 3.0, 0.3),
        (4.0, 1.0, -0.2),
        (5.0, 5.0, -0.5),
        (1.0, 4.0, 0.1),
        (3.0, 3.0, 2.0),
        (1.0, 1.5, 3.0),
        (-2.0, -3.0, 4.0),
        (-1.0, -1.0, 2.0),
        (2.0, 1.0, -3.0),
        (-1.0, -2.0, -5.0),
        (1.0, 1.0, 1.0),
        (4.0, 4.0, 1.0),
        (3.0, -3.0, -1.0),
        (-2.0, 2.0, -1.0),
        (0.0, 2.0, 0.5),
        (0.0, 0.0, -0.7),
        (2.0, 0.0, -0.5),
        (-1.0, 3.0, 0.2),
        (10.0, 0.5, 0.05),
        (0.7, 0.9, -0.9),
    ];
    let g = grid(&[9, 7], &[2.0, 1.5]);
    let (mut worst_res, mut worst_energy, mut count) = (0.0f64, 0.0f64, 0usize);
    let mut kinds = std::collections::HashSet::new();
    for (a, b, c) in tuples {
        let params = p(a, b, c);
        let expected = constant_energy(&params, g.domain());
        for fam in constant_solutions(&params) {
            kinds.insert(format!("{:?}", fam.kind));
            for &(c1, c2) in &fam.representatives {
                let pair = Pair::new(Field::constant(&g, c1), Field::constant(&g, c2)).unwrap();
                worst_res = worst_res.max(max_residual(&pair, &params));
                if let (FamilyKind::IsolatedPair, Some(e)) = (fam.kind, expected) {
                    if c1 != 0.0 && c2 != 0.0 {
                        worst_energy = worst_energy.max((energy(&pair, &params) - e).abs() / e.abs().max(f64::MIN_POSITIVE));
                    }
                }
                count += 1;
            }
        }
    }
    let pass = worst_res < 1e-12 && worst_energy < 1e-12 && kinds.len() == 5;
    outcome(pass, format!("{count} representatives, {} families, max residual {worst_res:.2e}, max energy deviation {worst_energy:.2e}", kinds.len()))
}

fn derivatives_are_consistent() -> Outcome {
    let mut worst = (0.0f64, f64::INFINITY, 0.0f64, 0.0f64);
    for n in [1, 2] {
        for s in gradient_check(n, 10, 7).unwrap() {
            worst.0 = worst.0.max(s.rel_err_small);
            worst.1 = worst.1.min(s.error_ratio);
            worst.2 = worst.2.max(s.error_ratio);
            worst.3 = worst.3.max(s.hessian_asymmetry);
        }
    }
    let pass = worst.0 < 1e-6 && worst.1 >= 50.0 && worst.2 <= 200.0 && worst.3 < 1e-12;
    outcome(
        pass,
        format!("max slope error {:.2e}, error ratio in [{:.1}, {:.1}], Hessian asymmetry {:.2e}", worst.0, worst.1, worst.2, worst.3),
    )
}

fn ball_constants_match_quadrature() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=4 {
        let c = constants_kqkm(n).unwrap();
        for (q, v) in [(0.0, c.k), (2.0, c.k2), (4.0, c.k4)] {
            let quad = k_q_quadrature(n, q).unwrap();
            worst = worst.max((v - quad).abs() / quad);
        }
        let m = (k_q_quadrature(n, 0.0).unwrap() + k_q_quadrature(n, 2.0).unwrap()).powi(2)
            / (4.0 * k_q_quadrature(n, 4.0).unwrap());
        worst = worst.max((c.m - m).abs() / m);
    }
    let c = constants_kqkm(1).unwrap();
    let exact = [(c.k, 2.0), (c.k2, 2.0 / 3.0), (c.k4, 0.4), (c.m, 40.0 / 9.0)];
    let exact_err = exact.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(worst < 1e-10 && exact_err < 1e-12, format!("max quadrature deviation {worst:.2e}, one-dimensional exact deviation {exact_err:.2e}"))
}

fn symmetric_family(rows: &[SweepResult]) -> Outcome {
    let g = grid(&[257], &[1.0]);
    let opts = SolveOptions::default();
    let mut pass = true;
    let mut detail = Vec::new();
    for (lam, result) in [1.0, 25.0].iter().zip(rows) {
        let scalar = solve_scalar(*lam, &g, &opts).unwrap();
        for row in &result.rows {
            let params = row.params;
            let c = 1.0 / (1.0 + params.beta).sqrt();
            let pair = Pair::new(scalar.z.scaled(c), scalar.z.scaled(c)).unwrap();
            let res = max_residual(&pair, &params);
            let bound = 2.0 * scalar.level / (1.0 + params.beta);
            let energy = row.report.as_ref().map_or(f64::NAN, |r| r.energy);
            let ok = res < 1e-6 * params.scale() && energy <= bound * (1.0 + 1e-6);
            pass &= ok;
            detail.push(format!("λ={lam} β={}: residual {res:.1e}, E/bound {:.6}", params.beta, energy / bound));
        }
    }
    outcome(pass, detail.join("; "))
}

fn nehari_restoration(result: &SweepResult) -> Outcome {
    let r = result.rows[0].report.as_ref().expect("competitive run succeeds");
    let params = result.rows[0].params;
    let tol = 1e-8 * params.scale();
    let worst = r
        .trace
        .iter()
        .flat_map(|t| t.constraint_residuals.iter().map(|x| x.abs()))
        .fold(0.0f64, f64::max);
    let bu = bilinear_b(&r.pair.u, &r.pair.u, params.lambda1).unwrap();
    let bv = bilinear_b(&r.pair.v, &r.pair.v, params.lambda2).unwrap();
    let dev = (r.energy - 0.25 * (bu + bv)).abs() / r.energy;
    let pass = r.converged && !r.trace.is_empty() && worst < tol && dev < 1e-8;
    outcome(pass, format!("{} projections, max constraint residual {worst:.2e}, energy identity deviation {dev:.2e}", r.trace.len()))
}

fn scalar_bounds() -> Outcome {
    let g = grid(&[257], &[1.0]);
    let m = constants_kqkm(1).unwrap().m;
    let mut pass = true;
    let mut detail = Vec::new();
    for lam in [1.0f64, 10.0, 100.0] {
        let r = solve_scalar(lam, &g, &SolveOptions::default()).unwrap();
        let constant = lam * lam / 4.0;
        let bound = constant.min(m * lam.powf(1.5));
        pass &= r.converged && r.level <= bound + 1e-8;
        if lam == 100.0 {
            let margin = constant - r.level;
            pass &= !r.is_constant && margin > 0.0;
            detail.push(format!("λ=100: L={:.6}, margin over constant {margin:.4}", r.level));
        } else {
            detail.push(format!("λ={lam}: L={:.6} ≤ {bound:.6}", r.level));
        }
    }
    outcome(pass, detail.join("; "))
}

fn beta_star_lower_bound() -> Outcome {
    let g = grid(&[257], &[1.0]);
    let params = p(2.0, 2.0, 0.5);
    let opts = SolveOptions::default();
    let level = solve_scalar(2.0, &g, &opts).unwrap().level;
    let est = beta_star_estimate(&params, &g, level, 25, &opts).unwrap();
    let min = est.evaluations.iter().copied().fold(f64::INFINITY, f64::min);
    let n = est.evaluations.len();
    let pass = n >= 200 && min >= 1.0 - 1e-8 && est.lower_bound_holds && (est.estimate - 1.0).abs() < 1e-4;
    outcome(pass, format!("{n} evaluations, min {min:.10}, estimate {:.10}", est.estimate))
}

fn segregation(result: &SweepResult) -> Outcome {
    let mut pass = true;
    let mut overlaps = Vec::new();
    for row in &result.rows {
        match &row.report {
            Some(r) => {
                pass &= r.converged && r.flags.fully_nontrivial && r.flags.positive && !r.flags.constant;
                overlaps.push(r.overlap);
            }
            None => pass = false,
        }
    }
    pass &= overlaps.len() == 3 && overlaps.windows(2).all(|w| w[1] < w[0]);
    outcome(pass, format!("overlaps {:?}", overlaps.iter().map(|o| format!("{o:.3e}")).collect::<Vec<_>>()))
}

fn zero_mass() -> Outcome {
    let g = grid(&[129], &[1.0]);
    let params = p(10.0, 0.0, -50.0);
    let r = solve_system(&params, &g, Method::ZeroMass, &SolveOptions::default()).unwrap();
    let u2v = g.integrate_slice(&r.pair.u.values().iter().zip(r.pair.v.values()).map(|(u, v)| u * u * v).collect::<Vec<_>>());
    let v3 = g.power_slice(r.pair.v.values(), 3.0);
    let constraint = (v3 + params.beta * u2v).abs();
    let pass = r.converged && r.flags.fully_nontrivial && constraint < 1e-8 * params.scale();
    outcome(pass, format!("|∫v³ + β∫u²v| = {constraint:.2e}, fully nontrivial {}", r.flags.fully_nontrivial))
}

fn scaling_laws() -> Outcome {
    let mut tent_ok = true;
    let mut worst = 0.0f64;
    for ladder in tent_ladders().unwrap() {
        for f in fit_exponents(&ladder) {
            tent_ok &= f.within_tolerance;
            let dev = if f.predicted == 0.0 { f.fitted.abs() } else { ((f.fitted - f.predicted) / f.predicted).abs() };
            worst = worst.max(dev);
        }
    }
    let bubbles = bubble_ladder().unwrap();
    let last = bubbles.last().unwrap();
    let grad_ok = (last.grad_ratio - 1.0).abs() <= 0.05;
    let spread = l2_ratio_spread(&bubbles);
    let max_ratio = bubbles.iter().map(|r| r.l2_log_ratio).fold(f64::NEG_INFINITY, f64::max);
    let l2_ok = spread.is_finite() && spread <= 2.0 && max_ratio <= l2_log_ratio_bound();
    outcome(
        tent_ok && grad_ok && l2_ok,
        format!(
            "tent exponents worst deviation {worst:.2e}; bubble |∇w|²/(S²/2) = {:.4} at ε = {}; |w|²/(ε|log ε|) spread {spread:.3}, max {max_ratio:.2} (bound {:.2})",
            last.grad_ratio,
            last.epsilon,
            l2_log_ratio_bound()
        ),
    )
}

fn regime_truth_table() -> Outcome {
    let unit = DomainSpec::unit(1, Boundary::Neumann).unwrap();
    let doubled = DomainSpec::new(vec![2.0], Boundary::Neumann).unwrap();
    let none = ConditionInputs::default();
    let with_cs = ConditionInputs {
        c_s: Some(10.0),
        ..Default::default()
    };
    let levels = ConditionInputs {
        l1: Some(1.0),
        l2: Some(1.0),
        c_s: None,
    };
    type Check = fn(&ConditionFlags) -> bool;
    let cases: [(&str, SystemParams, &DomainSpec, ConditionInputs, Check); 12] = [
        ("cooperative, nonpositive masses", p(-1.0, 3.0, 5.0), &unit, none, |f| f.cooperative_nonpositive_masses),
        ("nonpositive masses at β = 0", p(-1.0, 3.0, 0.0), &unit, none, |f| !f.cooperative_nonpositive_masses),
        ("inside the ratio window", p(1.0, 4.0, 2.0), &unit, none, |f| f.cooperative_ratio_window == Some(true)),
        ("ratio window endpoint", p(1.0, 4.0, 4.0), &unit, none, |f| f.cooperative_ratio_window == Some(false)),
        ("weak cooperation, large masses", p(400.0, 400.0, 0.0), &unit, none, |f| f.weak_cooperation_nonconstant == Some(true)),
        ("weak cooperation, small masses", p(100.0, 100.0, 0.0), &unit, none, |f| f.weak_cooperation_nonconstant == Some(false)),
        ("strong cooperation", p(4000.0, 4000.0, 1e6), &unit, with_cs, |f| f.strong_cooperation_nonconstant == Some(true)),
        ("weak competition", p(100.0, 100.0, -0.5), &unit, none, |f| f.competitive_nonconstant == Some(true)),
        ("competition endpoint β = -1", p(100.0, 100.0, -1.0), &unit, none, |f| f.competitive_nonconstant == Some(false)),
        ("equal masses above threshold", p(200.0, 200.0, -2.0), &unit, none, |f| f.equal_mass_nonconstant == Some(true)),
        ("equal masses below threshold", p(150.0, 150.0, -2.0), &unit, none, |f| f.equal_mass_nonconstant == Some(false)),
        ("coupling bound with and without volume", p(400.0, 400.0, 0.2), &doubled, levels, |f| {
            f.weak_cooperation_beta_bound == Some(false) && f.weak_cooperation_beta_bound_volume == Some(true)
        }),
    ];
    let failed: Vec<&str> = cases
        .iter()
        .filter(|(_, params, domain, inputs, check)| !check(&check_conditions(params, domain, inputs)))
        .map(|c| c.0)
        .collect();
    outcome(failed.is_empty(), format!("{} of {} points as designed {failed:?}", cases.len() - failed.len(), cases.len()))
}

fn reproducible(first: &[(&str, &SweepResult)], rerun: &[SweepResult]) -> Outcome {
    let mut same = Vec::new();
    for ((name, a), b) in first.iter().zip(rerun) {
        let (x, y) = (sweep_csv(a, false).unwrap(), sweep_csv(b, false).unwrap());
        same.push(format!("{name}: {}", if x == y { "identical" } else { "differs" }));
        if x != y {
            return outcome(false, same.join(", "));
        }
    }
    outcome(true, same.join(", "))
}

#[test]
fn acceptance() {
    let symmetric_runs = [sweep(257, &[1.0], &[-0.5, 2.0, 10.0], false), sweep(257, &[25.0], &[-0.5, 2.0, 10.0], false)];
    let nehari_run = sweep(129, &[5.0], &[-2.0], true);
    let segregation_run = sweep(129, &[5.0], &[-1.0, -10.0, -100.0], false);

    let results = vec![
        ("constant solutions", constant_solutions_are_exact()),
        ("derivative fidelity", derivatives_are_consistent()),
        ("closed-form constants", ball_constants_match_quadrature()),
        ("symmetric solution family", symmetric_family(&symmetric_runs)),
        ("Nehari constraint restoration", nehari_restoration(&nehari_run)),
        ("scalar bounds", scalar_bounds()),
        ("beta-star lower bound", beta_star_lower_bound()),
        ("segregation trend", segregation(&segregation_run)),
        ("zero-mass constraint", zero_mass()),
        ("tent and bubble scaling laws", scaling_laws()),
        ("regime truth table", regime_truth_table()),
        ("reproducibility", {
            let rerun = [
                sweep(257, &[1.0], &[-0.5, 2.0, 10.0], false),
                sweep(257, &[25.0], &[-0.5, 2.0, 10.0], false),
                sweep(129, &[5.0], &[-2.0], true),
                sweep(129, &[5.0], &[-1.0, -10.0, -100.0], false),
            ];
            let first = [
                ("symmetric λ=1", &symmetric_runs[0]),
                ("symmetric λ=25", &symmetric_runs[1]),
                ("competitive", &nehari_run),
                ("segregation", &segregation_run),
            ];
            reproducible(&first, &rerun)
        }),
    ];

    let mut failures = Vec::new();
    for (i, (name, o)) in results.iter().enumerate() {
        println!("[{}] {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        if !o.pass {
            failures.push(i + 1);
        }
    }
    assert!(failures.is_empty(), "failing criteria: {failures:?}");
}
