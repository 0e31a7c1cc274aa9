//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness. Unmet criteria are printed as FAIL and
//! do not change the exit status unless `FTPELLET_ACCEPTANCE_STRICT=1`.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ftpellet::analysis::{self, SweepRecord, SweepSettings, SweepSpec, GAMMAS};
use ftpellet::kinetics::{aggregate, l_function, product_rates, AggregatedCoefficients};
use ftpellet::numerics::{loglog_slope, logspace};
use ftpellet::pellet::{
    self, stepping, BoundaryConditions, GuessOptions, PelletConfig, PelletProblem, RefineOptions,
};
use ftpellet::site::{asymptotic_probe, solve_site_fraction, DEFAULT_TOL};
use ftpellet::surrogate::{invert_g, transform_g, RawModel, SiteBackend, Transform};
use ftpellet::toy::{solve_toy, ToySource, ToyVariant};
use ftpellet::{Conditions, KineticParameters};

struct Outcome {
    passed: bool,
    detail: String,
}

fn report(id: usize, name: &str, start: Instant, budget: f64, outcome: Outcome) -> bool {
    let secs = start.elapsed().as_secs_f64();
    let in_time = secs < budget;
    let passed = outcome.passed && in_time;
    println!(
        "{} [{id}] {name}: {} ({secs:.2} s, budget {budget} s{})",
        if passed { "PASS" } else { "FAIL" },
        outcome.detail,
        if in_time { "" } else { ", over budget" }
    );
    passed
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn toy_model() -> Outcome {
    let exact = ToySource::new(ToyVariant::Exact);
    let sol = solve_toy(&exact, 201, 1e-10).expect("toy exact");
    let err = sol
        .x
        .iter()
        .zip(&sol.c)
        .map(|(&x, &c)| (c - exact.exact_solution(x)).abs())
        .fold(0.0, f64::max);
    let a1 = solve_toy(&ToySource::new(ToyVariant::Approx1), 201, 1e-10).expect("toy approx1");
    let a2 = solve_toy(&ToySource::new(ToyVariant::Approx2), 201, 1e-10).expect("toy approx2");
    let (m1, m2) = (a1.min(), a2.min());
    Outcome {
        passed: err <= 1e-4 && m1 < 0.0 && m2 < 0.0 && m2 < m1,
        detail: format!(
            "exact max error {err:.2e}; min c approx1 {m1:.4} (converged {}), approx2 {m2:.4} (converged {}); approx2 deeper: {}",
            a1.converged,
            a2.converged,
            m2 < m1
        ),
    }
}

/// Direct evaluation of `sum_{n=1}^{terms} n R_par,n` and `sum_{n=2}^{terms} n R_ole,n`.
fn brute_force_sums(k: &AggregatedCoefficients, s: f64, terms: usize) -> (f64, f64) {
    let alpha = |n: usize| {
        k.kappa_growth
            / (k.kappa_growth
                + k.kappa_par_long
                + (-(n as f64) * k.c).exp() * if n == 2 { k.kappa_ole_short } else { k.kappa_ole_long } / s)
    };
    let mut log_prod = k.alpha1.ln();
    let mut par = k.kappa_par_short * k.alpha1 * s * s;
    let mut ole = 0.0;
    for n in 2..=terms {
        log_prod += alpha(n).ln();
        let ko = if n == 2 { k.kappa_ole_short } else { k.kappa_ole_long };
        par += n as f64 * (log_prod + (k.kappa_par_long * s * s).ln()).exp();
        ole += n as f64 * (log_prod + (ko * s).ln() - n as f64 * k.c).exp();
    }
    (par, ole)
}

fn series_corrections() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst_par: f64 = 0.0;
    let mut worst_ole: f64 = 0.0;
    let mut worst_l: f64 = 0.0;
    let n_max = 100;
    let mut cases = 0;
    while cases < 50 {
        let c = rng.random_range(0.2..0.35);
        let growth = rng.random_range(0.01..1.0);
        let eps: f64 = 10f64.powf(rng.random_range(-3.0..-0.5));
        let k = AggregatedCoefficients {
            kappa_growth: growth,
            kappa_par_long: eps * growth,
            kappa_ole_long: rng.random_range(1e-4..1e-2),
            kappa_par_short: rng.random_range(1.0..2.0) * eps * growth,
            kappa_ole_short: rng.random_range(1e-4..1e-2),
            c,
            c0: 1.0,
            c_s: 1.0,
            alpha1: 0.0,
            epsilon: eps,
            alpha_inf: 1.0 / (1.0 + eps),
        };
        let k = AggregatedCoefficients {
            alpha1: k.kappa_growth / (k.kappa_growth + k.kappa_par_short),
            ..k
        };
        let s: f64 = 10f64.powf(rng.random_range(-3.0..-0.3));
        let alpha_big = k.alpha_inf;
        if alpha_big * c.exp() > 0.99 {
            continue;
        }
        cases += 1;
        let b = product_rates(&k, s, n_max).expect("rates");
        let mut par: f64 = (1..=n_max).map(|n| n as f64 * b.paraffin(n)).sum();
        let mut ole: f64 = (2..=n_max).map(|n| n as f64 * b.olefin(n)).sum();
        par += l_function(b.tail.paraffin_ratio, n_max).unwrap() * b.paraffin(n_max);
        ole += l_function(b.tail.olefin_ratio, n_max).unwrap() * b.olefin(n_max);
        let (bp, bo) = brute_force_sums(&k, s, 100_000);
        worst_par = worst_par.max(rel(par, bp));
        worst_ole = worst_ole.max(rel(ole, bo));
    }
    for _ in 0..50 {
        let x: f64 = rng.random_range(0.0..0.99);
        let n0 = rng.random_range(0..200usize);
        let mut sum = 0.0;
        let mut term = x;
        let mut k = 1usize;
        while term > 1e-300 && k < 1_000_000 {
            sum += (n0 + k) as f64 * term;
            term *= x;
            k += 1;
        }
        worst_l = worst_l.max(rel(l_function(x, n0).unwrap(), sum));
    }
    Outcome {
        passed: worst_par <= 1e-6 && worst_ole <= 1e-6 && worst_l <= 1e-10,
        detail: format!(
            "max rel error paraffin {worst_par:.2e}, olefin {worst_ole:.2e}, L-function {worst_l:.2e}"
        ),
    }
}

fn asymptotics(params: &KineticParameters) -> Outcome {
    let template = Conditions::new(1.0, 1.0, 0.5, 493.15);
    let pressures = logspace(1e-4, 6.0, 49);
    let table = asymptotic_probe(params, &template, &pressures, DEFAULT_TOL).expect("probe");
    let lowest: Vec<f64> = table
        .rows
        .iter()
        .filter(|r| r.p_h2 <= 1e-3 * (1.0 + 1e-12))
        .map(|r| r.s_over_p_h2_sq)
        .collect();
    let hi = lowest.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = lowest.iter().cloned().fold(f64::INFINITY, f64::min);
    let variation = (hi - lo) / lo;
    Outcome {
        passed: (1.9..=2.1).contains(&table.small_slope) && variation < 0.1,
        detail: format!(
            "slope {:.4} over the lowest two decades, S/P_H2^2 variation {:.2}% over the lowest decade",
            table.small_slope,
            variation * 100.0
        ),
    }
}

fn transform_property(params: &KineticParameters) -> Outcome {
    let pressures = logspace(1e-5, 1e-3, 21);
    let slope_for = |backend: &SiteBackend| {
        let s: Vec<f64> = pressures
            .iter()
            .map(|&p| {
                let cond = Conditions::new(1.0, p, 0.5, 493.15);
                let coeffs = aggregate(params, &cond).unwrap();
                backend.evaluate(params, &cond, &coeffs).unwrap().s
            })
            .collect();
        loglog_slope(&pressures, &s)
    };
    let mut proposed = Vec::new();
    let mut baseline = Vec::new();
    for y0 in [0.0, 0.5, 1.0] {
        proposed.push(slope_for(&SiteBackend::Surrogate {
            raw: RawModel::Plateau(y0),
            transform: Transform::Proposed,
        }));
        baseline.push(slope_for(&SiteBackend::Surrogate {
            raw: RawModel::Plateau(y0),
            transform: Transform::Baseline,
        }));
    }
    let mut rng = StdRng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut outside = 0;
    for _ in 0..100 {
        let cond = Conditions::new(
            rng.random_range(0.01..6.0),
            rng.random_range(0.01..6.0),
            rng.random_range(0.01..6.1),
            rng.random_range(473.15..513.15),
        );
        let coeffs = aggregate(params, &cond).unwrap();
        let s = solve_site_fraction(params, &cond, DEFAULT_TOL).unwrap().s;
        match invert_g(&coeffs, s, 1e-13) {
            Ok(y) => worst = worst.max(rel(transform_g(&coeffs, y).unwrap(), s)),
            Err(_) => outside += 1,
        }
    }
    let ok = proposed.iter().all(|s| (1.9..=2.1).contains(s))
        && baseline.iter().all(|s| (-0.1..=0.1).contains(s))
        && worst <= 1e-10
        && outside == 0;
    Outcome {
        passed: ok,
        detail: format!(
            "plateau slopes G {:?}, baseline {:?}; round trip max rel error {worst:.2e}, \
             {outside}/100 conditions outside the range of G",
            proposed.iter().map(|s| (s * 1e4).round() / 1e4).collect::<Vec<_>>(),
            baseline.iter().map(|s| (s * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    }
}

fn implicit_positivity(params: &KineticParameters) -> Outcome {
    let config = PelletConfig::default();
    let backend = SiteBackend::default();
    let mut rng = StdRng::seed_from_u64(3);
    let mut ok = 0;
    let mut halvings = 0;
    let mut min_seen = f64::INFINITY;
    for _ in 0..100 {
        let bc = BoundaryConditions::new(
            rng.random_range(0.05..6.0),
            rng.random_range(0.05..6.0),
            0.5,
            493.15,
        );
        let problem = PelletProblem::new(params, &config, bc, &backend).unwrap();
        let w_bc = problem.w_bc();
        let n = config.n_grid;
        let w: stepping::Fields = (0..2)
            .map(|s| {
                (0..n)
                    .map(|i| {
                        if i + 1 == n {
                            w_bc[s]
                        } else if rng.random_bool(0.1) {
                            0.0
                        } else {
                            rng.random_range(0.0..1.5) * w_bc[s]
                        }
                    })
                    .collect()
            })
            .collect();
        let mut tau = stepping::initial_tau(&problem, 0.1).unwrap().unwrap_or(1.0) * 1e3;
        for _ in 0..60 {
            let out = stepping::implicit_step(&problem, &w, tau).unwrap();
            let m = out.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
            if m >= 0.0 {
                ok += 1;
                min_seen = min_seen.min(m);
                break;
            }
            tau *= 0.5;
            halvings += 1;
        }
    }
    Outcome {
        passed: ok == 100,
        detail: format!("{ok}/100 states stepped to non-negative output, {halvings} halvings, min {min_seen:.3e}"),
    }
}

fn guess_quality(records: &[SweepRecord]) -> Outcome {
    let s = analysis::summarize(records);
    let all_ok = records
        .iter()
        .all(|r| r.converged && r.error.is_none() && r.residual_norm <= 1e-8);
    Outcome {
        passed: s.mean_guess_error_co <= 2.0
            && s.mean_guess_error_h2 <= 2.0
            && s.mean_refine_iterations <= 3.0
            && all_ok,
        detail: format!(
            "mean guess error CO {:.3}% H2 {:.3}%, mean refine iterations {:.2}, converged {}/{}, max residual {:.2e}",
            s.mean_guess_error_co,
            s.mean_guess_error_h2,
            s.mean_refine_iterations,
            s.converged,
            s.cases,
            s.max_residual
        ),
    }
}

fn gamma(records: &[SweepRecord], settings: &SweepSettings<'_>) -> Outcome {
    let solved = analysis::solved_profiles(records);
    let rows = analysis::gamma_experiment(&solved, &GAMMAS, settings).expect("gamma");
    let mut monotone = true;
    for w in rows.windows(2) {
        monotone &= w[1].converged + 1 >= w[0].converged;
    }
    let last = rows.last().unwrap();
    let full = last.converged == last.cases;
    let nested = rows.iter().all(|r| r.relaxed_positive >= r.strictly_positive);
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("{}:{}/{}/{}", r.gamma, r.converged, r.relaxed_positive, r.strictly_positive))
        .collect();
    Outcome {
        passed: monotone && full && nested && !rows.is_empty(),
        detail: format!(
            "gamma:converged/relaxed/strict of {} cases: {}",
            last.cases,
            table.join(" ")
        ),
    }
}

fn derived(records: &[SweepRecord], params: &KineticParameters) -> Outcome {
    let converged: Vec<_> = records.iter().filter(|r| r.converged).collect();
    let mut eta_bad = Vec::new();
    let mut c5_bad = 0;
    let mut eta_max: f64 = 0.0;
    for r in &converged {
        match r.derived {
            Some(d) => {
                eta_max = eta_max.max(d.eta_co);
                if !(d.eta_co > 0.0 && d.eta_co <= 1.01) {
                    eta_bad.push(format!("({}, {}) -> {:.4}", r.bc.p_co, r.bc.p_h2, d.eta_co));
                }
                if !(0.0..=1.0).contains(&d.c5plus) {
                    c5_bad += 1;
                }
            }
            None => c5_bad += 1,
        }
    }

    let uniform = analysis::effectiveness_from_rates(&[-1.7; 100], -1.7, 1e-3).unwrap();

    let config = PelletConfig::default();
    let backend = SiteBackend::default();
    let problem =
        PelletProblem::new(params, &config, BoundaryConditions::new(3.0, 3.0, 0.5, 493.15), &backend).unwrap();
    let sol = pellet::solve_pellet(&problem, &GuessOptions::default(), &RefineOptions::default()).unwrap();
    let r_co: Vec<f64> = analysis::rate_fields(&problem, &sol.profile)
        .unwrap()
        .iter()
        .map(|b| b.r_co)
        .collect();
    let coarse = analysis::integrate_radial(&r_co, config.radius);
    let p = &sol.profile;
    let n = p.len();
    let reference = analysis::integrate_radial_simpson(
        |r| {
            let x = r / config.radius * (n - 1) as f64;
            let i = (x.floor() as usize).min(n - 2);
            let t = x - i as f64;
            let co = p.w_co[i] + t * (p.w_co[i + 1] - p.w_co[i]);
            let h2 = p.w_h2[i] + t * (p.w_h2[i + 1] - p.w_h2[i]);
            problem.local_rates(co, h2).unwrap().0
        },
        config.radius,
        10_001,
    );
    let quad = rel(coarse, reference);

    Outcome {
        passed: eta_bad.is_empty() && c5_bad == 0 && (uniform - 1.0).abs() <= 5e-3 && quad <= 5e-3,
        detail: format!(
            "{} converged cases, eta out of (0, 1.01]: {} {:?} (max {eta_max:.4}), C5+ out of [0, 1]: {c5_bad}; uniform eta {uniform:.5}; quadrature vs reference {:.2e}",
            converged.len(),
            eta_bad.len(),
            eta_bad,
            quad
        ),
    }
}

fn water(records: &[SweepRecord], params: &KineticParameters) -> Outcome {
    let config = PelletConfig::default();
    let backend = SiteBackend::default();
    let tol = RefineOptions::default().tol;
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    let mut checked = 0;
    for r in records.iter().filter(|r| r.converged) {
        let sol = r.solution.as_ref().unwrap();
        let problem = PelletProblem::new(params, &config, r.bc, &backend).unwrap();
        let res = pellet::h2o_residual(&problem, &sol.profile).unwrap();
        let scale = pellet::h2o_source_norm(&problem, &sol.profile).unwrap().max(1.0);
        worst = worst.max(res / scale);
        if res > tol * scale {
            bad += 1;
        }
        checked += 1;
    }
    Outcome {
        passed: bad == 0 && checked > 0,
        detail: format!("{checked} profiles, max scaled water residual {worst:.2e} (tolerance {tol:e}), violations {bad}"),
    }
}

fn main() {
    let params = KineticParameters::placeholder();
    let config = PelletConfig::default();
    let backend = SiteBackend::default();
    let settings = SweepSettings {
        params: &params,
        config: &config,
        backend: &backend,
        guess: GuessOptions::default(),
        refine: RefineOptions::default(),
        jobs: 0,
    };
    let mut results = Vec::new();

    let t = Instant::now();
    results.push(report(1, "toy model", t, 1.0, toy_model()));
    let t = Instant::now();
    results.push(report(2, "series corrections", t, 10.0, series_corrections()));
    let t = Instant::now();
    results.push(report(3, "site-fraction asymptotics", t, 5.0, asymptotics(&params)));
    let t = Instant::now();
    results.push(report(4, "transform G", t, 5.0, transform_property(&params)));
    let t = Instant::now();
    results.push(report(5, "implicit-step positivity", t, 5.0, implicit_positivity(&params)));

    let t = Instant::now();
    let records = analysis::run_sweep(&SweepSpec::uniform(10, 6.0, 0.5, 493.15), &settings).expect("sweep");
    let sweep_time = t.elapsed().as_secs_f64();
    results.push(report(6, "guess quality", t, 120.0, guess_quality(&records)));
    let t = Instant::now();
    results.push(report(7, "gamma experiment", t, 600.0, gamma(&records, &settings)));
    let t = Instant::now();
    results.push(report(8, "derived quantities", t, 60.0, derived(&records, &params)));
    let t = Instant::now();
    let w = water(&records, &params);
    results.push(report(9, "water elimination", t, 1.0 + sweep_time, w));

    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria met", results.len());
    if passed < results.len() && std::env::var("FTPELLET_ACCEPTANCE_STRICT").as_deref() == Ok("1") {
        std::process::exit(1);
    }
}
