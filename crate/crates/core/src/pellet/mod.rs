//! Steady reaction-diffusion of CO and H2 in a spherical catalyst pellet.
//!
//! Concentrations are scaled by `c_ref` and the radius by `R_p`. Water is not
//! solved for: its profile follows from `w_CO` because both obey the same
//! operator with sources in a fixed ratio.

pub mod laplacian;
pub mod source;
pub mod stepping;

use serde::{Deserialize, Serialize};

pub use laplacian::{Geometry, Laplacian};
pub use source::PelletProblem;
pub use stepping::{Fields, GuessOptions, ReactionSystem, RefineOptions};

use crate::error::{Error, Result};

/// Threshold for the relaxed positivity check.
pub const RELAXED_NEGATIVITY: f64 = -1.2e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PelletConfig {
    /// m
    pub radius: f64,
    /// Effective diffusivities, m^2/s.
    pub d_co: f64,
    pub d_h2: f64,
    pub d_h2o: f64,
    /// Henry constants, bar m^3/mol.
    pub h_co: f64,
    pub h_h2: f64,
    pub h_h2o: f64,
    /// kg/m^3
    pub rho_cat: f64,
    /// mol/m^3
    pub c_ref: f64,
    pub n_grid: usize,
}

impl Default for PelletConfig {
    fn default() -> Self {
        let porosity_over_tortuosity = 0.62 / 2.0;
        Self {
            radius: 0.85e-3,
            d_co: 1.3e-8 * porosity_over_tortuosity,
            d_h2: 3.6e-8 * porosity_over_tortuosity,
            d_h2o: 1.7e-8 * porosity_over_tortuosity,
            h_co: 0.165,
            h_h2: 0.222,
            h_h2o: 0.0291,
            rho_cat: 1980.0,
            c_ref: 1526.5,
            n_grid: 100,
        }
    }
}

impl PelletConfig {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("radius", self.radius),
            ("d_co", self.d_co),
            ("d_h2", self.d_h2),
            ("d_h2o", self.d_h2o),
            ("h_co", self.h_co),
            ("h_h2", self.h_h2),
            ("h_h2o", self.h_h2o),
            ("rho_cat", self.rho_cat),
            ("c_ref", self.c_ref),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if self.n_grid < 3 {
            return Err(Error::InvalidParameter(format!(
                "n_grid must be at least 3, got {}",
                self.n_grid
            )));
        }
        Ok(())
    }

    /// Surface concentrations from Henry's law, mol/m^3, for CO, H2, H2O.
    pub fn surface_concentrations(&self, bc: &BoundaryConditions) -> [f64; 3] {
        [
            bc.p_co * 10.0 / self.h_co,
            bc.p_h2 * 10.0 / self.h_h2,
            bc.p_h2o * 10.0 / self.h_h2o,
        ]
    }

    pub fn surface_w(&self, bc: &BoundaryConditions) -> [f64; 3] {
        self.surface_concentrations(bc).map(|c| c / self.c_ref)
    }

    pub fn grid(&self) -> Vec<f64> {
        let m = (self.n_grid - 1) as f64;
        (0..self.n_grid).map(|i| i as f64 / m).collect()
    }

    /// Catalyst mass of one pellet, kg.
    pub fn pellet_mass(&self) -> f64 {
        self.rho_cat * self.pellet_volume()
    }

    pub fn pellet_volume(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.radius.powi(3)
    }
}

/// Surface partial pressures (MPa) and temperature (K).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConditions {
    pub p_co: f64,
    pub p_h2: f64,
    pub p_h2o: f64,
    pub temperature: f64,
}

impl BoundaryConditions {
    pub fn new(p_co: f64, p_h2: f64, p_h2o: f64, temperature: f64) -> Self {
        Self {
            p_co,
            p_h2,
            p_h2o,
            temperature,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("P_CO", self.p_co), ("P_H2", self.p_h2), ("P_H2O", self.p_h2o)] {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidConditions(format!(
                    "surface {name} must be finite and non-negative, got {p}"
                )));
            }
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::InvalidConditions(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub x: Vec<f64>,
    pub w_co: Vec<f64>,
    pub w_h2: Vec<f64>,
    pub w_h2o: Vec<f64>,
}

impl Profile {
    pub fn from_fields(problem: &PelletProblem<'_>, fields: &Fields) -> Self {
        let w_co = fields[0].clone();
        Self {
            x: problem.laplacian().grid(),
            w_h2o: eliminate_h2o(&w_co, problem),
            w_co,
            w_h2: fields[1].clone(),
        }
    }

    pub fn fields(&self) -> Fields {
        vec![self.w_co.clone(), self.w_h2.clone()]
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn min_w(&self) -> f64 {
        self.w_co
            .iter()
            .chain(&self.w_h2)
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// `w_BC + gamma (w_target - w_BC)` for CO and H2, water re-derived.
    pub fn blend(problem: &PelletProblem<'_>, target: &Profile, gamma: f64) -> Self {
        let bc = problem.w_bc();
        let mix = |t: &[f64], b: f64| t.iter().map(|v| b + (v - b) * gamma).collect::<Vec<_>>();
        let fields = vec![mix(&target.w_co, bc[0]), mix(&target.w_h2, bc[1])];
        Self::from_fields(problem, &fields)
    }
}

/// Water profile from the CO profile.
pub fn eliminate_h2o(w_co: &[f64], problem: &PelletProblem<'_>) -> Vec<f64> {
    w_co.iter().map(|&w| problem.eliminate_h2o_point(w)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    /// Interior max-norm of `L w + s(w)` over CO and H2.
    pub residual_norm: f64,
    pub source_norm: f64,
    pub tolerance: f64,
    pub guess_iterations: usize,
    pub guess_rejected: usize,
    pub guess_settled: bool,
    pub refine_iterations: usize,
    pub refine_rejected: usize,
    pub tau0: Option<f64>,
    pub guess_tau_history: Vec<f64>,
    pub refine_tau_history: Vec<f64>,
    pub min_w: f64,
    pub strictly_positive: bool,
    pub relaxed_positive: bool,
}

impl SolveReport {
    fn with_positivity(mut self, profile: &Profile) -> Self {
        self.min_w = profile.min_w();
        self.strictly_positive = self.min_w > 0.0;
        self.relaxed_positive = self.min_w > RELAXED_NEGATIVITY;
        self
    }

    fn empty(tol: f64) -> Self {
        Self {
            converged: false,
            residual_norm: f64::NAN,
            source_norm: f64::NAN,
            tolerance: tol,
            guess_iterations: 0,
            guess_rejected: 0,
            guess_settled: false,
            refine_iterations: 0,
            refine_rejected: 0,
            tau0: None,
            guess_tau_history: Vec::new(),
            refine_tau_history: Vec::new(),
            min_w: f64::NAN,
            strictly_positive: false,
            relaxed_positive: false,
        }
    }
}

pub fn build_laplacian(n_grid: usize) -> Laplacian {
    Laplacian::new(n_grid, Geometry::Spherical)
}

/// Initial guess from the non-negative lagged scheme.
pub fn initial_guess(
    problem: &PelletProblem<'_>,
    opts: &GuessOptions,
) -> Result<(Profile, SolveReport)> {
    let run = stepping::initial_guess(problem, opts)?;
    let profile = Profile::from_fields(problem, &run.fields);
    let s = stepping::source_fields(problem, &run.fields)?;
    let r = stepping::residual_fields(problem, &run.fields, &s);
    let mut report = SolveReport::empty(f64::NAN);
    report.residual_norm = stepping::interior_max_norm(&r);
    report.source_norm = stepping::max_norm(&s);
    report.guess_iterations = run.iterations;
    report.guess_rejected = run.rejected;
    report.guess_settled = run.settled;
    report.tau0 = run.tau0;
    report.guess_tau_history = run.tau_history;
    report.refine_tau_history = vec![run.tau];
    let report = report.with_positivity(&profile);
    if !run.settled {
        return Err(Error::GuessFailed {
            iterations: run.iterations,
            profile: Box::new(profile),
            report: Box::new(report),
        });
    }
    Ok((profile, report))
}

/// Iterates from `start` to the steady state. Non-convergence is reported in
/// the returned report, not as an error.
pub fn solve_bvp(
    problem: &PelletProblem<'_>,
    start: &Profile,
    tau0: Option<f64>,
    opts: &RefineOptions,
) -> Result<(Profile, SolveReport)> {
    if start.len() != problem.config.n_grid {
        return Err(Error::GridMismatch(start.len(), problem.config.n_grid));
    }
    let tau = match tau0 {
        Some(t) => t,
        None => stepping::initial_tau(problem, GuessOptions::default().tau_factor)?
            .unwrap_or(opts.tau_max),
    };
    let run = stepping::refine(problem, &start.fields(), tau, opts)?;
    let profile = Profile::from_fields(problem, &run.fields);
    let mut report = SolveReport::empty(opts.tol);
    report.converged = run.converged;
    report.residual_norm = run.residual_norm;
    report.source_norm = run.source_norm;
    report.refine_iterations = run.iterations;
    report.refine_rejected = run.rejected;
    report.tau0 = Some(tau);
    report.refine_tau_history = run.tau_history;
    let report = report.with_positivity(&profile);
    Ok((profile, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PelletSolution {
    pub guess: Profile,
    pub profile: Profile,
    pub report: SolveReport,
}

/// Initial guess followed by refinement, with the guess step size carried over.
pub fn solve_pellet(
    problem: &PelletProblem<'_>,
    guess_opts: &GuessOptions,
    refine_opts: &RefineOptions,
) -> Result<PelletSolution> {
    let (guess, g) = initial_guess(problem, guess_opts)?;
    let tau = g.refine_tau_history.last().copied().filter(|t| t.is_finite());
    let (profile, mut report) = solve_bvp(problem, &guess, tau.or(Some(refine_opts.tau_max)), refine_opts)?;
    report.guess_iterations = g.guess_iterations;
    report.guess_rejected = g.guess_rejected;
    report.guess_settled = g.guess_settled;
    report.tau0 = g.tau0;
    report.guess_tau_history = g.guess_tau_history;
    Ok(PelletSolution {
        guess,
        profile,
        report,
    })
}

/// Interior max-norm of the water transport residual for a profile, with
/// the water source taken from the CO rate (`R_H2O = -R_CO`).
pub fn h2o_residual(problem: &PelletProblem<'_>, profile: &Profile) -> Result<f64> {
    let lap = problem.laplacian();
    let n = lap.len();
    let mut worst: f64 = 0.0;
    for i in 0..n - 1 {
        let s = problem.scaled_sources(profile.w_co[i], profile.w_h2[i])?[2];
        worst = worst.max((lap.apply_row(&profile.w_h2o, i) + s).abs());
    }
    Ok(worst)
}

/// Largest water source magnitude on a profile.
pub fn h2o_source_norm(problem: &PelletProblem<'_>, profile: &Profile) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..profile.len() {
        worst = worst.max(problem.scaled_sources(profile.w_co[i], profile.w_h2[i])?[2].abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::KineticParameters;
    use crate::surrogate::SiteBackend;

    #[test]
    fn zero_co_gives_constant_guess() {
        let p = KineticParameters::placeholder();
        let c = PelletConfig::default();
        let b = SiteBackend::default();
        let prob = PelletProblem::new(&p, &c, BoundaryConditions::new(0.0, 2.0, 0.5, 493.15), &b)
            .unwrap();
        let (g, r) = initial_guess(&prob, &GuessOptions::default()).unwrap();
        assert_eq!(r.guess_iterations, 1);
        let w = prob.w_bc();
        assert!(g.w_h2.iter().all(|&v| v == w[1]));
        assert!(g.w_co.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn elimination_is_affine() {
        let p = KineticParameters::placeholder();
        let c = PelletConfig::default();
        let b = SiteBackend::default();
        let prob = PelletProblem::new(&p, &c, BoundaryConditions::new(1.0, 2.0, 0.5, 493.15), &b)
            .unwrap();
        let w = prob.w_bc();
        let h = eliminate_h2o(&[w[0], w[0], 0.0], &prob);
        assert_eq!(h[0], w[2]);
        assert!((h[2] - (w[2] + c.d_co / c.d_h2o * w[0])).abs() < 1e-14);
    }

    #[test]
    fn default_solve_converges() {
        let p = KineticParameters::placeholder();
        let c = PelletConfig::default();
        let b = SiteBackend::default();
        let prob = PelletProblem::new(&p, &c, BoundaryConditions::new(2.0, 4.0, 0.5, 493.15), &b)
            .unwrap();
        let sol = solve_pellet(&prob, &GuessOptions::default(), &RefineOptions::default()).unwrap();
        assert!(sol.report.converged, "{:?}", sol.report);
        assert!(sol.report.strictly_positive);
        let w = prob.w_bc();
        assert_eq!(sol.profile.w_co[c.n_grid - 1], w[0]);
        assert!(h2o_residual(&prob, &sol.profile).unwrap() <= 1e-8 * sol.report.source_norm.max(1.0));
    }
}
