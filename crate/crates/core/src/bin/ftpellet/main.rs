mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ftpellet::analysis::{self, SweepSettings, SweepSpec, GAMMAS};
use ftpellet::error::{Error, Result};
use ftpellet::kinetics::RateBundle;
use ftpellet::numerics::logspace;
use ftpellet::pellet::{self, BoundaryConditions, GuessOptions, PelletProblem, Profile, RefineOptions, SolveReport};
use ftpellet::site::{self, SiteSolution, DEFAULT_TOL};
use ftpellet::toy::{self, ToySource, ToyVariant};
use ftpellet::Conditions;

use config::RunConfig;
use output::{cell, emit_table, opt, to_json, write_file, Table};

#[derive(Parser)]
#[command(name = "ftpellet", version, about = "Fischer-Tropsch catalyst pellet solver")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Kinetic parameter file (TOML). Defaults to the bundled placeholder set.
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    /// Surrogate weight file (JSON).
    #[arg(long, global = true)]
    weights: Option<PathBuf>,
    /// exact | weights | weights:<path> | plateau:<y0> | baseline10y
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Radial grid points of the pellet (toy: points on [0, 1]).
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Convergence tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory. Tables go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// TOML file with defaults for the flags above.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Copy)]
struct PointArgs {
    /// MPa
    #[arg(long)]
    p_co: f64,
    /// MPa
    #[arg(long)]
    p_h2: f64,
    /// MPa
    #[arg(long, default_value_t = 0.5)]
    p_h2o: f64,
    /// K
    #[arg(long, default_value_t = 493.15)]
    temperature: f64,
}

#[derive(Args, Debug, Clone, Copy)]
struct SweepArgs {
    /// Points per pressure axis.
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Largest CO and H2 pressure, MPa.
    #[arg(long, default_value_t = 6.0)]
    p_max: f64,
    #[arg(long, default_value_t = 0.5)]
    p_h2o: f64,
    #[arg(long, default_value_t = 493.15)]
    temperature: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Site fraction and product rates at one set of conditions.
    Site(PointArgs),
    /// Site fraction along a logarithmic H2 pressure sweep.
    Probe {
        #[arg(long, default_value_t = 1.0)]
        p_co: f64,
        #[arg(long, default_value_t = 0.5)]
        p_h2o: f64,
        #[arg(long, default_value_t = 493.15)]
        temperature: f64,
        #[arg(long, default_value_t = 1e-6)]
        min: f64,
        #[arg(long, default_value_t = 6.0)]
        max: f64,
        #[arg(long, default_value_t = 61)]
        points: usize,
    },
    /// Concentration profile of one pellet.
    Pellet(PointArgs),
    /// Pellet solves over a pressure grid, with derived quantities.
    Sweep(SweepArgs),
    /// Restarts from blends of the surface state and the converged profile.
    Gamma {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Comma-separated blend factors.
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
    },
    /// One-dimensional toy problem with exact and approximate sinks.
    Toy,
    /// Runs the built-in invariant checks.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = RunConfig::resolve(&cli.global)?;
    match cli.command {
        Command::Site(p) => cmd_site(&cfg, p),
        Command::Probe {
            p_co,
            p_h2o,
            temperature,
            min,
            max,
            points,
        } => cmd_probe(&cfg, Conditions::new(p_co, 1.0, p_h2o, temperature), min, max, points),
        Command::Pellet(p) => cmd_pellet(&cfg, p),
        Command::Sweep(s) => cmd_sweep(&cfg, s),
        Command::Gamma { sweep, gammas } => cmd_gamma(&cfg, sweep, gammas.unwrap_or_else(|| GAMMAS.to_vec())),
        Command::Toy => cmd_toy(&cfg),
        Command::Validate => cmd_validate(&cfg),
    }
}

fn to_params_unit(cfg: &RunConfig, p: PointArgs) -> Conditions {
    let u = cfg.params.pressure_unit;
    Conditions::new(u.from_mpa(p.p_co), u.from_mpa(p.p_h2), u.from_mpa(p.p_h2o), p.temperature)
}

#[derive(Serialize)]
struct SiteOutput {
    conditions_mpa: Conditions,
    solution: SiteSolution,
    backend: String,
    backend_s: f64,
    rates: RateBundle,
}

fn cmd_site(cfg: &RunConfig, p: PointArgs) -> Result<ExitCode> {
    let cond = to_params_unit(cfg, p);
    cond.validate()?;
    let solution = site::solve_site_fraction(&cfg.params, &cond, cfg.tol.unwrap_or(DEFAULT_TOL))?;
    let backend_s = cfg.backend.evaluate(&cfg.params, &cond, &solution.coeffs)?.s;
    let rates = cfg.backend.rates(&cfg.params, &cond)?;
    let out = SiteOutput {
        conditions_mpa: Conditions::new(p.p_co, p.p_h2, p.p_h2o, p.temperature),
        solution,
        backend: cfg.backend_name.clone(),
        backend_s,
        rates,
    };
    if cfg.json {
        println!("{}", to_json(&out));
    } else {
        let s = &out.solution;
        println!("S          {}", s.s);
        println!("residual   {:e}", s.residual);
        println!("iterations {}", s.iterations);
        println!("alpha1     {}", s.coeffs.alpha1);
        println!("alpha_inf  {}", s.coeffs.alpha_inf);
        println!("S[{}] {}", out.backend, out.backend_s);
        println!("R_CO       {}", out.rates.r_co);
        println!("R_H2       {}", out.rates.r_h2);
        println!("R_CH4      {}", out.rates.paraffins[0]);
        println!("C5+ molar  {}", out.rates.molar_production_from(5));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_probe(cfg: &RunConfig, template_mpa: Conditions, min: f64, max: f64, points: usize) -> Result<ExitCode> {
    if !(min > 0.0 && max > min && points >= 2) {
        return Err(Error::InvalidParameter("probe needs 0 < min < max and points >= 2".into()));
    }
    let u = cfg.params.pressure_unit;
    let template = Conditions::new(
        u.from_mpa(template_mpa.p_co),
        1.0,
        u.from_mpa(template_mpa.p_h2o),
        template_mpa.temperature,
    );
    let pressures: Vec<f64> = logspace(min, max, points).into_iter().map(|p| u.from_mpa(p)).collect();
    let table = site::asymptotic_probe(&cfg.params, &template, &pressures, cfg.tol.unwrap_or(DEFAULT_TOL))?;
    if cfg.json && cfg.out.is_none() {
        println!("{}", to_json(&table));
        return Ok(ExitCode::SUCCESS);
    }
    let mut t = Table::new(&["p_h2", "s", "s_over_p_h2_sq"]);
    for r in &table.rows {
        t.push(vec![cell(r.p_h2), cell(r.s), cell(r.s_over_p_h2_sq)]);
    }
    emit_table(cfg.out.as_deref(), "probe.csv", &t)?;
    eprintln!("slope over lowest two decades {}", table.small_slope);
    eprintln!("slope over top decade {}", table.large_slope);
    Ok(ExitCode::SUCCESS)
}

fn refine_options(cfg: &RunConfig) -> RefineOptions {
    let mut o = RefineOptions::default();
    if let Some(t) = cfg.tol {
        o.tol = t;
    }
    o
}

fn profile_table(p: &Profile) -> Table {
    let mut t = Table::new(&["x", "w_CO", "w_H2", "w_H2O"]);
    for i in 0..p.len() {
        t.push(vec![cell(p.x[i]), cell(p.w_co[i]), cell(p.w_h2[i]), cell(p.w_h2o[i])]);
    }
    t
}

#[derive(Serialize)]
struct PelletOutput<'a> {
    boundary: BoundaryConditions,
    backend: &'a str,
    report: &'a SolveReport,
    derived: Option<analysis::DerivedQuantities>,
    guess_error: Option<analysis::GuessError>,
    profile: &'a Profile,
}

fn cmd_pellet(cfg: &RunConfig, p: PointArgs) -> Result<ExitCode> {
    let bc = BoundaryConditions::new(p.p_co, p.p_h2, p.p_h2o, p.temperature);
    let problem = PelletProblem::new(&cfg.params, &cfg.pellet, bc, &cfg.backend)?;
    let (guess, profile, report) =
        match pellet::solve_pellet(&problem, &GuessOptions::default(), &refine_options(cfg)) {
            Ok(s) => (Some(s.guess), s.profile, s.report),
            Err(Error::GuessFailed {
                iterations,
                profile,
                report,
            }) => {
                eprintln!("initial guess did not settle after {iterations} iterations");
                (None, *profile, *report)
            }
            Err(e) => return Err(e),
        };
    let derived = if report.converged {
        analysis::derived_quantities(&problem, &profile).ok()
    } else {
        None
    };
    let guess_error = match &guess {
        Some(g) => Some(analysis::guess_error(g, &profile)?),
        None => None,
    };
    let out = PelletOutput {
        boundary: bc,
        backend: &cfg.backend_name,
        report: &report,
        derived,
        guess_error,
        profile: &profile,
    };
    if let Some(dir) = &cfg.out {
        write_file(dir, "profile.csv", &profile_table(&profile).render())?;
        write_file(dir, "report.json", &to_json(&out))?;
        eprintln!("wrote {}", dir.display());
    }
    if cfg.json {
        println!("{}", to_json(&out));
    } else if cfg.out.is_none() {
        print!("{}", profile_table(&profile).render());
    }
    eprintln!(
        "converged {} residual {:e} refine iterations {} min w {:e}",
        report.converged, report.residual_norm, report.refine_iterations, report.min_w
    );
    if !report.strictly_positive {
        eprintln!("warning: profile has non-positive concentrations");
    }
    Ok(if report.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn settings(cfg: &RunConfig) -> SweepSettings<'_> {
    SweepSettings {
        params: &cfg.params,
        config: &cfg.pellet,
        backend: &cfg.backend,
        guess: GuessOptions::default(),
        refine: refine_options(cfg),
        jobs: cfg.jobs,
    }
}

fn sweep_spec(s: SweepArgs) -> Result<SweepSpec> {
    if s.n == 0 || !(s.p_max > 0.0) {
        return Err(Error::InvalidParameter("sweep needs n >= 1 and p_max > 0".into()));
    }
    Ok(SweepSpec::uniform(s.n, s.p_max, s.p_h2o, s.temperature))
}

fn cmd_sweep(cfg: &RunConfig, s: SweepArgs) -> Result<ExitCode> {
    let spec = sweep_spec(s)?;
    let records = analysis::run_sweep(&spec, &settings(cfg))?;
    let summary = analysis::summarize(&records);
    let mut t = Table::new(&[
        "x_co", "x_h2", "p_co", "p_h2", "converged", "residual", "refine_iterations", "min_w",
        "r_tot_co", "r_tot_co_specific", "eta_co", "c5plus", "guess_error_co", "guess_error_h2",
        "h2o_residual", "error",
    ]);
    for r in &records {
        let d = r.derived;
        t.push(vec![
            cell(r.x_co),
            cell(r.x_h2),
            cell(r.bc.p_co),
            cell(r.bc.p_h2),
            cell(r.converged),
            cell(r.residual_norm),
            cell(r.refine_iterations),
            cell(r.min_w),
            opt(d.map(|d| d.r_tot_co)),
            opt(d.map(|d| d.r_tot_co_specific)),
            opt(d.map(|d| d.eta_co)),
            opt(d.map(|d| d.c5plus)),
            opt(r.guess_error.map(|g| g.co)),
            opt(r.guess_error.map(|g| g.h2)),
            opt(r.h2o_residual),
            r.error.clone().unwrap_or_default().replace(',', ";"),
        ]);
    }
    emit_table(cfg.out.as_deref(), "sweep.csv", &t)?;
    if let Some(dir) = &cfg.out {
        write_file(dir, "sweep_summary.json", &to_json(&summary))?;
    }
    if cfg.json {
        eprintln!("{}", to_json(&summary));
    } else {
        eprintln!(
            "{} cases, {} converged, mean guess error CO {:.3}% H2 {:.3}%, mean refine iterations {:.2}",
            summary.cases,
            summary.converged,
            summary.mean_guess_error_co,
            summary.mean_guess_error_h2,
            summary.mean_refine_iterations
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gamma(cfg: &RunConfig, s: SweepArgs, gammas: Vec<f64>) -> Result<ExitCode> {
    if gammas.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidParameter("gammas must be finite".into()));
    }
    let spec = sweep_spec(s)?;
    let st = settings(cfg);
    let records = analysis::run_sweep(&spec, &st)?;
    let solved = analysis::solved_profiles(&records);
    let rows = analysis::gamma_experiment(&solved, &gammas, &st)?;
    if cfg.json && cfg.out.is_none() {
        println!("{}", to_json(&rows));
        return Ok(ExitCode::SUCCESS);
    }
    let mut t = Table::new(&[
        "gamma", "cases", "converged", "strictly_positive", "relaxed_positive", "success_fraction",
        "strict_fraction", "relaxed_fraction", "mean_iterations", "seconds",
    ]);
    for r in &rows {
        t.push(vec![
            cell(r.gamma),
            cell(r.cases),
            cell(r.converged),
            cell(r.strictly_positive),
            cell(r.relaxed_positive),
            cell(r.success_fraction()),
            cell(r.strict_fraction()),
            cell(r.relaxed_fraction()),
            cell(r.mean_iterations),
            cell(r.seconds),
        ]);
    }
    emit_table(cfg.out.as_deref(), "gamma.csv", &t)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ToySummary {
    variant: ToyVariant,
    converged: bool,
    iterations: usize,
    residual_norm: f64,
    min: f64,
}

fn cmd_toy(cfg: &RunConfig) -> Result<ExitCode> {
    let n = cfg.grid.unwrap_or(201);
    let tol = cfg.tol.unwrap_or(1e-10);
    let mut solutions = Vec::new();
    for v in ToyVariant::ALL {
        solutions.push(toy::solve_toy(&ToySource::new(v), n, tol)?);
    }
    let summary: Vec<ToySummary> = solutions
        .iter()
        .map(|s| ToySummary {
            variant: s.variant,
            converged: s.converged,
            iterations: s.iterations,
            residual_norm: s.residual_norm,
            min: s.min(),
        })
        .collect();

    let mut profiles = Table::new(&["x", "exact", "approx1", "approx2", "analytic"]);
    let exact = ToySource::new(ToyVariant::Exact);
    for i in 0..n {
        let x = solutions[0].x[i];
        profiles.push(vec![
            cell(x),
            cell(solutions[0].c[i]),
            cell(solutions[1].c[i]),
            cell(solutions[2].c[i]),
            cell(exact.exact_solution(x)),
        ]);
    }
    let lo = solutions.iter().map(|s| s.c_range.0).fold(0.0, f64::min);
    let hi = solutions.iter().map(|s| s.c_range.1).fold(1.0, f64::max);
    let mut sources = Table::new(&["c", "exact", "approx1", "approx2"]);
    let tables: Vec<_> = ToyVariant::ALL
        .iter()
        .map(|&v| toy::source_table(&ToySource::new(v), lo, hi, 401))
        .collect();
    for i in 0..401 {
        sources.push(vec![
            cell(tables[0][i].0),
            cell(tables[0][i].1),
            cell(tables[1][i].1),
            cell(tables[2][i].1),
        ]);
    }
    match &cfg.out {
        Some(dir) => {
            write_file(dir, "toy_profiles.csv", &profiles.render())?;
            write_file(dir, "toy_sources.csv", &sources.render())?;
            write_file(dir, "toy_summary.json", &to_json(&summary))?;
            eprintln!("wrote {}", dir.display());
        }
        None if !cfg.json => print!("{}", profiles.render()),
        None => {}
    }
    if cfg.json {
        println!("{}", to_json(&summary));
    } else {
        for s in &summary {
            eprintln!(
                "{:8} converged {:5} iterations {:4} min c {}",
                s.variant.to_string(),
                s.converged,
                s.iterations,
                s.min
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(cfg: &RunConfig) -> Result<ExitCode> {
    let checks = ftpellet::validate::run_all(&cfg.params);
    if cfg.json {
        println!("{}", to_json(&checks));
    } else {
        for c in &checks {
            println!("{} {:26} {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
        }
    }
    Ok(if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
