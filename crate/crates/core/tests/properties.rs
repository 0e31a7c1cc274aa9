use proptest::prelude::*;

use ftpellet::kinetics::{aggregate, alpha_n, l_function, product_rates};
use ftpellet::pellet::{stepping, BoundaryConditions, PelletConfig, PelletProblem};
use ftpellet::site::{solve_site_fraction, DEFAULT_TOL};
use ftpellet::surrogate::{invert_g, transform_g, transform_g_limit, SiteBackend};
use ftpellet::{Conditions, KineticParameters};

fn conditions() -> impl Strategy<Value = Conditions> {
    (1e-3..6.0f64, 1e-3..6.0f64, 1e-3..6.1f64, 473.15..513.15f64)
        .prop_map(|(co, h2, h2o, t)| Conditions::new(co, h2, h2o, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn l_function_matches_partial_sums(x in 0.0..0.95f64, n0 in 0usize..50) {
        let mut sum = 0.0;
        let mut term = x;
        for k in 1..5000 {
            sum += (n0 + k) as f64 * term;
            term *= x;
        }
        let l = l_function(x, n0).unwrap();
        prop_assert!((l - sum).abs() <= 1e-10 * sum.max(1e-300));
    }

    #[test]
    fn alpha_n_in_unit_interval(cond in conditions(), s in 1e-8..1.0f64, n in 2usize..200) {
        let c = aggregate(&KineticParameters::placeholder(), &cond).unwrap();
        let a = alpha_n(&c, s, n).unwrap();
        prop_assert!(a > 0.0 && a < 1.0);
        prop_assert!(a <= c.alpha_inf * (1.0 + 1e-15));
    }

    #[test]
    fn site_fraction_bounded_with_small_residual(cond in conditions()) {
        let sol = solve_site_fraction(&KineticParameters::placeholder(), &cond, DEFAULT_TOL).unwrap();
        prop_assert!(sol.s > 0.0 && sol.s <= 1.0);
        prop_assert!(sol.residual <= 1e-10);
    }

    #[test]
    fn transform_non_increasing_and_bounded(cond in conditions(), y1 in 0.0..50.0f64, dy in 0.0..50.0f64) {
        let c = aggregate(&KineticParameters::placeholder(), &cond).unwrap();
        let g1 = transform_g(&c, y1).unwrap();
        let g2 = transform_g(&c, y1 + dy).unwrap();
        prop_assert!(g2 <= g1 * (1.0 + 1e-14));
        prop_assert!(g2 > transform_g_limit(&c) * (1.0 - 1e-12));
    }

    #[test]
    fn invert_then_transform(cond in conditions(), y in 0.0..30.0f64) {
        let c = aggregate(&KineticParameters::placeholder(), &cond).unwrap();
        let s = transform_g(&c, y).unwrap();
        let back = invert_g(&c, s, 1e-13).unwrap();
        let again = transform_g(&c, back).unwrap();
        prop_assert!((again - s).abs() <= 1e-10 * s);
    }

    #[test]
    fn tail_consistent_with_longer_sums(cond in conditions()) {
        let params = KineticParameters::placeholder();
        let sol = solve_site_fraction(&params, &cond, DEFAULT_TOL).unwrap();
        let short = product_rates(&sol.coeffs, sol.s, params.n_max).unwrap();
        let long = product_rates(&sol.coeffs, sol.s, 10 * params.n_max).unwrap();
        prop_assert!((short.r_co - long.r_co).abs() <= 1e-8 * long.r_co.abs());
        prop_assert!((short.r_h2 - long.r_h2).abs() <= 1e-8 * long.r_h2.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn implicit_step_keeps_non_negative(
        co in 0.05..6.0f64,
        h2 in 0.05..6.0f64,
        scale in prop::collection::vec(0.0..1.5f64, 2 * 40),
        log_tau in -3.0..3.0f64,
    ) {
        let params = KineticParameters::placeholder();
        let config = PelletConfig { n_grid: 40, ..PelletConfig::default() };
        let backend = SiteBackend::default();
        let problem = PelletProblem::new(&params, &config, BoundaryConditions::new(co, h2, 0.5, 493.15), &backend).unwrap();
        let bc = problem.w_bc();
        let w: stepping::Fields = (0..2)
            .map(|s| (0..40).map(|i| if i == 39 { bc[s] } else { bc[s] * scale[s * 40 + i] }).collect())
            .collect();
        let tau = stepping::initial_tau(&problem, 0.1).unwrap().unwrap_or(1.0) * 10f64.powf(log_tau);
        let out = stepping::implicit_step(&problem, &w, tau).unwrap();
        prop_assert!(out.iter().flatten().all(|v| *v >= 0.0));
    }
}
