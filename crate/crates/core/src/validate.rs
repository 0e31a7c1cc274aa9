//! Self-checks run by `ftpellet validate`.

use serde::Serialize;

use crate::analysis;
use crate::error::{Error, Result};
use crate::kinetics::{aggregate, l_function, product_rates};
use crate::numerics::logspace;
use crate::params::{Conditions, KineticParameters};
use crate::pellet::{self, stepping, BoundaryConditions, GuessOptions, PelletConfig, PelletProblem, RefineOptions};
use crate::site::{asymptotic_probe, solve_site_fraction, DEFAULT_TOL};
use crate::surrogate::{invert_g, transform_g, transform_g_direct, SiteBackend};
use crate::toy::{solve_toy, ToySource, ToyVariant};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn sample_conditions(temperature: f64) -> Vec<Conditions> {
    let mut out = Vec::new();
    for &co in &[0.05, 0.6, 3.0, 6.0] {
        for &h2 in &[0.01, 0.6, 3.0, 6.0] {
            for &h2o in &[0.0, 0.5, 3.0] {
                out.push(Conditions::new(co, h2, h2o, temperature));
            }
        }
    }
    out
}

fn l_series() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for &x in &[0.1, 0.5, 0.9, 0.99] {
        for &n0 in &[0usize, 10, 100] {
            let mut sum = 0.0;
            let mut term = x;
            for k in 1..=200_000 {
                sum += (n0 + k) as f64 * term;
                term *= x;
                if term < 1e-300 {
                    break;
                }
            }
            worst = worst.max(rel(l_function(x, n0)?, sum));
        }
    }
    Ok((worst <= 1e-10, format!("max relative error {worst:.2e}")))
}

fn tail_consistency(params: &KineticParameters) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for cond in sample_conditions(493.15) {
        if cond.p_h2o == 0.0 {
            continue;
        }
        let sol = solve_site_fraction(params, &cond, DEFAULT_TOL)?;
        let short = product_rates(&sol.coeffs, sol.s, params.n_max)?;
        let long = product_rates(&sol.coeffs, sol.s, 20 * params.n_max)?;
        worst = worst.max(rel(short.r_co, long.r_co)).max(rel(short.r_h2, long.r_h2));
    }
    Ok((worst <= 1e-8, format!("max relative change with 20x N_max {worst:.2e}")))
}

fn site_balance(params: &KineticParameters) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let mut bounded = true;
    for cond in sample_conditions(493.15) {
        let sol = solve_site_fraction(params, &cond, DEFAULT_TOL)?;
        bounded &= sol.s > 0.0 && sol.s <= 1.0;
        worst = worst.max(sol.residual);
    }
    Ok((
        bounded && worst <= 1e-10,
        format!("S in (0, 1]: {bounded}, max residual {worst:.2e}"),
    ))
}

fn asymptotics(params: &KineticParameters) -> Result<(bool, String)> {
    let template = Conditions::new(1.0, 1.0, 0.5, 493.15);
    let table = asymptotic_probe(params, &template, &logspace(1e-6, 1e-3, 31), DEFAULT_TOL)?;
    let slope = table.small_slope;
    Ok(((1.9..=2.1).contains(&slope), format!("small-pressure slope {slope:.4}")))
}

fn transform(params: &KineticParameters) -> Result<(bool, String)> {
    let mut round_trip: f64 = 0.0;
    let mut forms: f64 = 0.0;
    let mut monotone = true;
    let mut outside = 0usize;
    for cond in sample_conditions(493.15) {
        if cond.p_h2o == 0.0 {
            continue;
        }
        let coeffs = aggregate(params, &cond)?;
        let s = solve_site_fraction(params, &cond, DEFAULT_TOL)?.s;
        match invert_g(&coeffs, s, 1e-13) {
            Ok(y) => round_trip = round_trip.max(rel(transform_g(&coeffs, y)?, s)),
            Err(Error::OutOfRange { .. }) => outside += 1,
            Err(e) => return Err(e),
        }
        let mut last = f64::INFINITY;
        for &y in &[0.0, 0.3, 1.0, 3.0, 10.0, 100.0] {
            let g = transform_g(&coeffs, y)?;
            monotone &= g <= last;
            last = g;
            forms = forms.max(rel(g, transform_g_direct(&coeffs, y)?));
        }
    }
    Ok((
        round_trip <= 1e-10 && forms <= 1e-10 && monotone,
        format!(
            "round trip {round_trip:.2e}, forms {forms:.2e}, non-increasing {monotone}, \
             {outside} conditions outside the range of G"
        ),
    ))
}

fn implicit_positivity(params: &KineticParameters) -> Result<(bool, String)> {
    let config = PelletConfig::default();
    let backend = SiteBackend::default();
    let problem = PelletProblem::new(params, &config, BoundaryConditions::new(2.0, 4.0, 0.5, 493.15), &backend)?;
    let tau = stepping::initial_tau(&problem, GuessOptions::default().tau_factor)?.unwrap_or(1.0);
    let bc = problem.w_bc();
    let n = config.n_grid;
    let mut min = f64::INFINITY;
    for k in 0..8 {
        let f = |i: usize, s: usize| {
            let t = ((i * (3 + k) + s * 7 + k * 13) % 17) as f64 / 16.0;
            t * t * t
        };
        let w: stepping::Fields = (0..2)
            .map(|s| (0..n).map(|i| if i + 1 == n { bc[s] } else { bc[s] * f(i, s) }).collect())
            .collect();
        let out = stepping::implicit_step(&problem, &w, tau)?;
        min = out.iter().flatten().cloned().fold(min, f64::min);
    }
    Ok((min >= 0.0, format!("smallest stepped value {min:.3e}")))
}

fn toy() -> Result<(bool, String)> {
    let src = ToySource::new(ToyVariant::Exact);
    let sol = solve_toy(&src, 201, 1e-10)?;
    let err = sol
        .x
        .iter()
        .zip(&sol.c)
        .map(|(&x, &c)| (c - src.exact_solution(x)).abs())
        .fold(0.0, f64::max);
    Ok((sol.converged && err <= 1e-4, format!("max error {err:.2e}")))
}

fn pellet_case(params: &KineticParameters) -> Result<(bool, String)> {
    let config = PelletConfig::default();
    let backend = SiteBackend::default();
    let problem = PelletProblem::new(params, &config, BoundaryConditions::new(2.0, 4.0, 0.5, 493.15), &backend)?;
    let refine = RefineOptions::default();
    let sol = pellet::solve_pellet(&problem, &GuessOptions::default(), &refine)?;
    let water = pellet::h2o_residual(&problem, &sol.profile)?;
    let water_tol = refine.tol * pellet::h2o_source_norm(&problem, &sol.profile)?.max(1.0);
    let d = analysis::derived_quantities(&problem, &sol.profile)?;
    let coherent = rel(d.r_tot_co_specific * config.pellet_mass(), d.r_tot_co) <= 1e-12;
    let ok = sol.report.converged
        && sol.report.strictly_positive
        && water <= water_tol
        && d.eta_co > 0.0
        && (0.0..=1.0).contains(&d.c5plus)
        && coherent;
    Ok((
        ok,
        format!(
            "converged {}, residual {:.2e}, water residual {water:.2e}, eta {:.4}, C5+ {:.4}",
            sol.report.converged, sol.report.residual_norm, d.eta_co, d.c5plus
        ),
    ))
}

/// Runs every check. Never short-circuits.
pub fn run_all(params: &KineticParameters) -> Vec<Check> {
    vec![
        check("l_function_series", l_series()),
        check("tail_corrections", tail_consistency(params)),
        check("site_balance", site_balance(params)),
        check("site_asymptotics", asymptotics(params)),
        check("transform_g", transform(params)),
        check("implicit_step_positivity", implicit_positivity(params)),
        check("toy_exact", toy()),
        check("pellet_single_case", pellet_case(params)),
    ]
}
