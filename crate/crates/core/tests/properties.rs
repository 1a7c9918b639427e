use std::sync::Arc;

use proptest::prelude::*;

use groundstate_core::operators::SystemParams;
use groundstate_core::regimes::{beta_underbar, check_conditions, ConditionInputs};
use groundstate_core::{auto_select_method, energy, nehari_scaling, Boundary, DomainSpec, Field, Grid, Method, Pair};

fn grid() -> Arc<Grid> {
    Grid::new(DomainSpec::unit(1, Boundary::Neumann).unwrap(), &[33]).unwrap()
}

fn bump(g: &Arc<Grid>, center: f64, width: f64) -> Field {
    Field::from_fn(g, |x| 0.2 + (-((x[0] - center) / width).powi(2)).exp()).unwrap()
}

proptest! {
    #[test]
    fn method_table_is_total_and_tagged(l1 in -20.0f64..20.0, l2 in -20.0f64..20.0, beta in -50.0f64..50.0, ub in proptest::option::of(0.0f64..0.8)) {
        let p = SystemParams::new(l1, l2, beta).unwrap();
        let a = auto_select_method(&p, ub);
        prop_assert_eq!(&a, &auto_select_method(&p, ub));
        prop_assert_eq!(a.outside_theory, a.clause == "outside_theory");
        if a.outside_theory {
            prop_assert_eq!(a.method, Method::GeneralizedNehari);
        }
        if l1 > 0.0 && l2 > 0.0 && beta < 0.0 {
            prop_assert_eq!(a.method, Method::Nehari);
        }
    }

    #[test]
    fn nehari_projection_ignores_amplitudes(a in 0.1f64..10.0, b in 0.1f64..10.0, beta in -5.0f64..-0.01) {
        let g = grid();
        let p = SystemParams::new(5.0, 5.0, beta).unwrap();
        let (u, v) = (bump(&g, 0.3, 0.2), bump(&g, 0.7, 0.25));
        let base = nehari_scaling(&u, &v, &p).unwrap();
        let scaled = nehari_scaling(&u.scaled(a), &v.scaled(b), &p).unwrap();
        prop_assert!((scaled.t * a - base.t).abs() <= 1e-10 * base.t);
        prop_assert!((scaled.s * b - base.s).abs() <= 1e-10 * base.s);
    }

    #[test]
    fn energy_is_swap_symmetric(l1 in -5.0f64..5.0, l2 in -5.0f64..5.0, beta in -5.0f64..5.0, c in 0.05f64..0.95) {
        let g = grid();
        let p = SystemParams::new(l1, l2, beta).unwrap();
        let pair = Pair::new(bump(&g, c, 0.2), bump(&g, 1.0 - c, 0.3)).unwrap();
        let e = energy(&pair, &p);
        let s = energy(&pair.swapped(), &p.swapped());
        prop_assert!((e - s).abs() <= 1e-12 * (1.0 + e.abs()));
    }

    #[test]
    fn underbar_is_symmetric_and_capped(l1 in 0.01f64..100.0, l2 in 0.01f64..100.0) {
        let a = beta_underbar(l1, l2).unwrap();
        prop_assert_eq!(a, beta_underbar(l2, l1).unwrap());
        prop_assert!(a > 0.0 && a <= 0.5f64.sqrt() + 1e-15);
    }

    #[test]
    fn ratio_window_endpoints_are_excluded(l1 in 0.1f64..10.0, l2 in 0.1f64..10.0) {
        prop_assume!((l1 - l2).abs() > 1e-3);
        let d = DomainSpec::unit(1, Boundary::Neumann).unwrap();
        let none = ConditionInputs::default();
        let (lo, hi) = ((l1 / l2).min(l2 / l1), (l1 / l2).max(l2 / l1));
        for (beta, want) in [(lo, false), (hi, false), (0.5 * (lo + hi), true)] {
            let p = SystemParams::new(l1, l2, beta).unwrap();
            prop_assert_eq!(check_conditions(&p, &d, &none).cooperative_ratio_window, Some(want));
        }
    }

    #[test]
    fn competition_condition_flips_at_its_endpoints(lam in 1.0f64..1e4) {
        let d = DomainSpec::unit(1, Boundary::Neumann).unwrap();
        let none = ConditionInputs::default();
        for beta in [-1.0, 0.0] {
            let p = SystemParams::new(lam, lam, beta).unwrap();
            prop_assert_eq!(check_conditions(&p, &d, &none).competitive_nonconstant, Some(false));
        }
    }
}
