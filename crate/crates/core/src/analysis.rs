//! Pellet-level quantities, guess-quality metrics, and the sweep and
//! blended-guess harnesses.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::RateBundle;
use crate::params::KineticParameters;
use crate::pellet::{
    self, BoundaryConditions, GuessOptions, PelletConfig, PelletProblem, PelletSolution, Profile,
    RefineOptions,
};
use crate::surrogate::SiteBackend;

/// `int_0^R f(r) 4 pi r^2 dr` by the trapezoid rule on the uniform grid that
/// `f` is sampled on (endpoints included).
pub fn integrate_radial(f: &[f64], radius: f64) -> f64 {
    let n = f.len();
    if n < 2 {
        return 0.0;
    }
    let h = radius / (n - 1) as f64;
    let g = |i: usize| {
        let r = i as f64 * h;
        f[i] * 4.0 * std::f64::consts::PI * r * r
    };
    let inner: f64 = (1..n - 1).map(g).sum();
    h * (inner + 0.5 * (g(0) + g(n - 1)))
}

/// Composite Simpson version of [`integrate_radial`] for a function of the
/// radius. `n` is rounded up to an odd point count.
pub fn integrate_radial_simpson(f: impl Fn(f64) -> f64, radius: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n + 1 } else { n.max(3) };
    let h = radius / (n - 1) as f64;
    let g = |i: usize| {
        let r = i as f64 * h;
        f(r) * 4.0 * std::f64::consts::PI * r * r
    };
    let mut sum = g(0) + g(n - 1);
    for i in 1..n - 1 {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i);
    }
    sum * h / 3.0
}

/// Rates at every grid node of a profile.
pub fn rate_fields(problem: &PelletProblem<'_>, profile: &Profile) -> Result<Vec<RateBundle>> {
    profile
        .w_co
        .iter()
        .zip(&profile.w_h2)
        .map(|(&co, &h2)| {
            let cond = problem.local_conditions(co, h2);
            problem.backend.rates(problem.params, &cond)
        })
        .collect()
}

/// Rates at the pellet surface.
pub fn surface_rates(problem: &PelletProblem<'_>) -> Result<RateBundle> {
    let w = problem.w_bc();
    let cond = problem.local_conditions(w[0], w[1]);
    problem.backend.rates(problem.params, &cond)
}

/// Effectiveness factor from dimensional integration over the pellet.
pub fn effectiveness_factor(problem: &PelletProblem<'_>, profile: &Profile) -> Result<f64> {
    let r_co: Vec<f64> = rate_fields(problem, profile)?.iter().map(|b| b.r_co).collect();
    effectiveness_from_rates(&r_co, surface_rates(problem)?.r_co, problem.config.radius)
}

pub fn effectiveness_from_rates(r_co: &[f64], r_surface: f64, radius: f64) -> Result<f64> {
    if r_surface == 0.0 {
        return Err(Error::ZeroSurfaceRate);
    }
    let volume = 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3);
    Ok(integrate_radial(r_co, radius) / (volume * r_surface))
}

/// Effectiveness factor as `3 int_0^1 x^2 f/f_s dx` on the scaled grid.
pub fn effectiveness_factor_scaled(r_co: &[f64], r_surface: f64) -> Result<f64> {
    if r_surface == 0.0 {
        return Err(Error::ZeroSurfaceRate);
    }
    let n = r_co.len();
    let h = 1.0 / (n - 1) as f64;
    let g = |i: usize| {
        let x = i as f64 * h;
        3.0 * x * x * r_co[i] / r_surface
    };
    let inner: f64 = (1..n - 1).map(g).sum();
    Ok(h * (inner + 0.5 * (g(0) + g(n - 1))))
}

/// Fraction of molar production in chains of five or more carbons, with
/// production integrated over the pellet.
pub fn c5plus_fraction(rates: &[RateBundle], radius: f64) -> Result<f64> {
    let num: Vec<f64> = rates.iter().map(|b| b.molar_production_from(5)).collect();
    let den: Vec<f64> = rates.iter().map(|b| b.molar_production_from(1)).collect();
    let den = integrate_radial(&den, radius);
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(integrate_radial(&num, radius) / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    /// Total CO consumption of one pellet, mol/s.
    pub r_tot_co: f64,
    /// Same, per kg of catalyst, mol/(s kg).
    pub r_tot_co_specific: f64,
    pub eta_co: f64,
    pub c5plus: f64,
}

pub fn derived_quantities(problem: &PelletProblem<'_>, profile: &Profile) -> Result<DerivedQuantities> {
    let cfg = problem.config;
    let rates = rate_fields(problem, profile)?;
    let r_co: Vec<f64> = rates.iter().map(|b| -b.r_co).collect();
    let r_tot_co = cfg.rho_cat * integrate_radial(&r_co, cfg.radius);
    let surface = -surface_rates(problem)?.r_co;
    Ok(DerivedQuantities {
        r_tot_co,
        r_tot_co_specific: r_tot_co / cfg.pellet_mass(),
        eta_co: effectiveness_from_rates(&r_co, surface, cfg.radius)?,
        c5plus: c5plus_fraction(&rates, cfg.radius)?,
    })
}

/// `max_x |w_final - w_guess| / w(1)` in percent, per species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuessError {
    pub co: f64,
    pub h2: f64,
}

pub fn guess_error(guess: &Profile, fin: &Profile) -> Result<GuessError> {
    if guess.len() != fin.len() {
        return Err(Error::GridMismatch(guess.len(), fin.len()));
    }
    let one = |g: &[f64], f: &[f64], name: &'static str| -> Result<f64> {
        let bc = *f.last().ok_or(Error::ZeroBoundary(name))?;
        if bc == 0.0 {
            return Err(Error::ZeroBoundary(name));
        }
        let d = g.iter().zip(f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(d / bc.abs() * 100.0)
    };
    Ok(GuessError {
        co: one(&guess.w_co, &fin.w_co, "CO")?,
        h2: one(&guess.w_h2, &fin.w_h2, "H2")?,
    })
}

/// Rectangular grid of surface pressures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// MPa
    pub p_co: Vec<f64>,
    /// MPa
    pub p_h2: Vec<f64>,
    pub p_h2o: f64,
    pub temperature: f64,
    /// Pressures used to normalise the output keys, MPa.
    pub p_co_max: f64,
    pub p_h2_max: f64,
}

impl SweepSpec {
    /// `n` equally spaced values in `(0, p_max]` per axis.
    pub fn uniform(n: usize, p_max: f64, p_h2o: f64, temperature: f64) -> Self {
        let axis: Vec<f64> = (1..=n).map(|i| p_max * i as f64 / n as f64).collect();
        Self {
            p_co: axis.clone(),
            p_h2: axis,
            p_h2o,
            temperature,
            p_co_max: p_max,
            p_h2_max: p_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_co.is_empty() || self.p_h2.is_empty() {
            return Err(Error::InvalidParameter("sweep axes must not be empty".into()));
        }
        if !(self.p_co_max > 0.0 && self.p_h2_max > 0.0) {
            return Err(Error::InvalidParameter("sweep normalisation must be positive".into()));
        }
        Ok(())
    }

    /// Cases in row-major order, CO outer.
    pub fn cases(&self) -> Vec<BoundaryConditions> {
        self.p_co
            .iter()
            .flat_map(|&co| {
                self.p_h2
                    .iter()
                    .map(move |&h2| BoundaryConditions::new(co, h2, self.p_h2o, self.temperature))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub index: usize,
    pub bc: BoundaryConditions,
    pub x_co: f64,
    pub x_h2: f64,
    pub converged: bool,
    pub residual_norm: f64,
    pub guess_iterations: usize,
    pub refine_iterations: usize,
    pub min_w: f64,
    pub guess_error: Option<GuessError>,
    pub derived: Option<DerivedQuantities>,
    /// Water transport residual of the reconstructed profile.
    pub h2o_residual: Option<f64>,
    pub error: Option<String>,
    pub seconds: f64,
    #[serde(skip)]
    pub solution: Option<PelletSolution>,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepSettings<'a> {
    pub params: &'a KineticParameters,
    pub config: &'a PelletConfig,
    pub backend: &'a SiteBackend,
    pub guess: GuessOptions,
    pub refine: RefineOptions,
    /// Worker threads; 0 picks the rayon default.
    pub jobs: usize,
}

fn solve_case(settings: &SweepSettings<'_>, spec: &SweepSpec, index: usize, bc: BoundaryConditions) -> SweepRecord {
    let start = Instant::now();
    let mut record = SweepRecord {
        index,
        bc,
        x_co: bc.p_co / spec.p_co_max,
        x_h2: bc.p_h2 / spec.p_h2_max,
        converged: false,
        residual_norm: f64::NAN,
        guess_iterations: 0,
        refine_iterations: 0,
        min_w: f64::NAN,
        guess_error: None,
        derived: None,
        h2o_residual: None,
        error: None,
        seconds: 0.0,
        solution: None,
    };
    let outcome = (|| -> Result<()> {
        let problem = PelletProblem::new(settings.params, settings.config, bc, settings.backend)?;
        let sol = pellet::solve_pellet(&problem, &settings.guess, &settings.refine)?;
        record.converged = sol.report.converged;
        record.residual_norm = sol.report.residual_norm;
        record.guess_iterations = sol.report.guess_iterations;
        record.refine_iterations = sol.report.refine_iterations;
        record.min_w = sol.report.min_w;
        record.guess_error = Some(guess_error(&sol.guess, &sol.profile)?);
        record.h2o_residual = Some(pellet::h2o_residual(&problem, &sol.profile)?);
        if sol.report.converged {
            record.derived = Some(derived_quantities(&problem, &sol.profile)?);
        }
        record.solution = Some(sol);
        Ok(())
    })();
    if let Err(e) = outcome {
        record.error = Some(e.to_string());
    }
    record.seconds = start.elapsed().as_secs_f64();
    record
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Solves every case of the sweep. Records come back in case order.
pub fn run_sweep(spec: &SweepSpec, settings: &SweepSettings<'_>) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let cases = spec.cases();
    with_pool(settings.jobs, || {
        cases
            .par_iter()
            .enumerate()
            .map(|(i, &bc)| solve_case(settings, spec, i, bc))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub cases: usize,
    pub converged: usize,
    pub failed: usize,
    pub mean_guess_error_co: f64,
    pub mean_guess_error_h2: f64,
    pub max_guess_error_co: f64,
    pub max_guess_error_h2: f64,
    pub mean_refine_iterations: f64,
    pub max_residual: f64,
    pub seconds: f64,
}

pub fn summarize(records: &[SweepRecord]) -> SweepSummary {
    let errors: Vec<GuessError> = records.iter().filter_map(|r| r.guess_error).collect();
    let mean = |v: &mut dyn Iterator<Item = f64>, n: usize| {
        if n == 0 {
            f64::NAN
        } else {
            v.sum::<f64>() / n as f64
        }
    };
    let solved: Vec<&SweepRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    SweepSummary {
        cases: records.len(),
        converged: records.iter().filter(|r| r.converged).count(),
        failed: records.len() - solved.len(),
        mean_guess_error_co: mean(&mut errors.iter().map(|e| e.co), errors.len()),
        mean_guess_error_h2: mean(&mut errors.iter().map(|e| e.h2), errors.len()),
        max_guess_error_co: errors.iter().map(|e| e.co).fold(0.0, f64::max),
        max_guess_error_h2: errors.iter().map(|e| e.h2).fold(0.0, f64::max),
        mean_refine_iterations: mean(
            &mut solved.iter().map(|r| r.refine_iterations as f64),
            solved.len(),
        ),
        max_residual: solved.iter().map(|r| r.residual_norm).fold(0.0, f64::max),
        seconds: records.iter().map(|r| r.seconds).sum(),
    }
}

pub const GAMMAS: [f64; 6] = [0.0, 0.25, 0.5, 0.75, 0.9, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    pub gamma: f64,
    pub cases: usize,
    pub converged: usize,
    pub strictly_positive: usize,
    pub relaxed_positive: usize,
    pub mean_iterations: f64,
    pub seconds: f64,
}

impl GammaRow {
    pub fn success_fraction(&self) -> f64 {
        self.converged as f64 / self.cases.max(1) as f64
    }

    pub fn strict_fraction(&self) -> f64 {
        self.strictly_positive as f64 / self.cases.max(1) as f64
    }

    pub fn relaxed_fraction(&self) -> f64 {
        self.relaxed_positive as f64 / self.cases.max(1) as f64
    }
}

struct GammaOutcome {
    converged: bool,
    strict: bool,
    relaxed: bool,
    iterations: usize,
}

/// Restarts the refinement from `w_BC + gamma (w_exact - w_BC)` for every
/// solved case and every `gamma`. Positivity counts only converged runs.
pub fn gamma_experiment(
    solved: &[(BoundaryConditions, Profile)],
    gammas: &[f64],
    settings: &SweepSettings<'_>,
) -> Result<Vec<GammaRow>> {
    let mut rows = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let start = Instant::now();
        let outcomes: Vec<GammaOutcome> = with_pool(settings.jobs, || {
            solved
                .par_iter()
                .map(|(bc, exact)| {
                    let run = || -> Result<GammaOutcome> {
                        let problem =
                            PelletProblem::new(settings.params, settings.config, *bc, settings.backend)?;
                        let guess = Profile::blend(&problem, exact, gamma);
                        let (_, report) = pellet::solve_bvp(&problem, &guess, None, &settings.refine)?;
                        Ok(GammaOutcome {
                            converged: report.converged,
                            strict: report.converged && report.strictly_positive,
                            relaxed: report.converged && report.relaxed_positive,
                            iterations: report.refine_iterations,
                        })
                    };
                    run().unwrap_or(GammaOutcome {
                        converged: false,
                        strict: false,
                        relaxed: false,
                        iterations: 0,
                    })
                })
                .collect()
        })?;
        let n = outcomes.len();
        rows.push(GammaRow {
            gamma,
            cases: n,
            converged: outcomes.iter().filter(|o| o.converged).count(),
            strictly_positive: outcomes.iter().filter(|o| o.strict).count(),
            relaxed_positive: outcomes.iter().filter(|o| o.relaxed).count(),
            mean_iterations: outcomes.iter().map(|o| o.iterations as f64).sum::<f64>() / n.max(1) as f64,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(rows)
}

/// Converged `(bc, profile)` pairs from sweep records.
pub fn solved_profiles(records: &[SweepRecord]) -> Vec<(BoundaryConditions, Profile)> {
    records
        .iter()
        .filter(|r| r.converged)
        .filter_map(|r| r.solution.as_ref().map(|s| (r.bc, s.profile.clone())))
        .collect()
}
