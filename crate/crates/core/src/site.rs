//! Vacant-site fraction from the site balance `1/S = c0 + c_S a1 J(S)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::{aggregate, AggregatedCoefficients};
use crate::numerics::{illinois, loglog_slope};
use crate::params::{Conditions, KineticParameters};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_SERIES_TERMS: usize = 100_000;
const SERIES_REL_TOL: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSum {
    pub j: f64,
    pub terms_used: usize,
}

/// `J = 1 + a2 + a2 a3 + ...` with a closed-form geometric tail.
///
/// Summation stops once the remaining tail is bounded by `rel_tol * J`, or
/// once the olefin contribution to `alpha_n` is below rounding, after which
/// `alpha_n = alpha_inf` and the geometric tail is exact.
pub fn series_j(coeffs: &AggregatedCoefficients, s: f64, rel_tol: f64) -> Result<SeriesSum> {
    if !(s > 0.0) {
        return Err(Error::InvalidSite(s));
    }
    if coeffs.kappa_growth == 0.0 {
        return Ok(SeriesSum { j: 1.0, terms_used: 0 });
    }
    if coeffs.kappa_par_long == 0.0 {
        return Err(Error::TailDiverges(1.0));
    }
    // alpha_inf / (1 - alpha_inf)
    let tail_factor = coeffs.kappa_growth / coeffs.kappa_par_long;
    let floor = coeffs.kappa_growth + coeffs.kappa_par_long;

    let decay = (-coeffs.c).exp();
    let mut e_nc = decay * decay;
    let mut sum = 1.0;
    let mut p = 1.0;
    let mut n = 2usize;
    loop {
        let olefin = e_nc * coeffs.kappa_ole(n) / s;
        if n > 2 && olefin <= f64::EPSILON * 0.25 * floor {
            sum += p * tail_factor;
            return Ok(SeriesSum { j: sum, terms_used: n - 2 });
        }
        p *= coeffs.kappa_growth / (floor + olefin);
        sum += p;
        let bound = p * tail_factor;
        if bound <= rel_tol * sum || p < 1e-300 || n - 1 >= MAX_SERIES_TERMS {
            sum += bound;
            return Ok(SeriesSum { j: sum, terms_used: n - 1 });
        }
        n += 1;
        e_nc *= decay;
    }
}

/// `c0 + c_S a1 J(S)`, the right-hand side of the site balance.
pub fn site_rhs(coeffs: &AggregatedCoefficients, s: f64) -> Result<(f64, SeriesSum)> {
    let series = series_j(coeffs, s, SERIES_REL_TOL)?;
    Ok((coeffs.c0 + coeffs.c_s * coeffs.alpha1 * series.j, series))
}

/// `F(S) = 1/S - RHS(S)`, strictly decreasing in `S`.
pub fn site_residual(coeffs: &AggregatedCoefficients, s: f64) -> Result<f64> {
    Ok(1.0 / s - site_rhs(coeffs, s)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteSolution {
    pub s: f64,
    pub j: f64,
    /// `|1/S - RHS| / (1/S)` at the returned `S`.
    pub residual: f64,
    pub iterations: usize,
    pub terms_used: usize,
    pub coeffs: AggregatedCoefficients,
}

pub fn solve_site_fraction(
    params: &KineticParameters,
    cond: &Conditions,
    tol: f64,
) -> Result<SiteSolution> {
    let coeffs = aggregate(params, cond)?;
    solve_with_coeffs(&coeffs, tol)
}

pub fn solve_with_coeffs(coeffs: &AggregatedCoefficients, tol: f64) -> Result<SiteSolution> {
    let hi = 1.0 / coeffs.c0;
    if coeffs.alpha1 == 0.0 || coeffs.c_s == 0.0 {
        let series = series_j(coeffs, hi, SERIES_REL_TOL)?;
        return Ok(SiteSolution {
            s: hi,
            j: series.j,
            residual: 0.0,
            iterations: 0,
            terms_used: series.terms_used,
            coeffs: *coeffs,
        });
    }

    let f_hi = site_residual(coeffs, hi)?;
    if f_hi > 0.0 {
        return Err(Error::NoBracket(format!(
            "F(1/c0) = {f_hi} > 0; check the parameter file"
        )));
    }

    // J <= 1/(1 - alpha_inf) gives a lower bound on S.
    let j_max = 1.0 + coeffs.kappa_growth / coeffs.kappa_par_long;
    let mut lo = 1.0 / (coeffs.c0 + coeffs.c_s * coeffs.alpha1 * j_max);
    let mut f_lo = site_residual(coeffs, lo)?;
    let mut shrink = 0;
    while !(f_lo >= 0.0) {
        lo *= 0.1;
        shrink += 1;
        if shrink > 600 || lo == 0.0 {
            return Err(Error::NoBracket("lower end of the bracket underflowed".into()));
        }
        f_lo = site_residual(coeffs, lo)?;
    }

    let root = illinois(
        |u| site_residual(coeffs, u.exp()).map(|f| f * u.exp()),
        lo.ln(),
        hi.ln(),
        tol,
        400,
    )?;
    let s = root.x.exp();
    let (rhs, series) = site_rhs(coeffs, s)?;
    Ok(SiteSolution {
        s,
        j: series.j,
        residual: (1.0 - s * rhs).abs(),
        iterations: root.iterations + shrink,
        terms_used: series.terms_used,
        coeffs: *coeffs,
    })
}

/// The proof bound `eps^4 / b`, reading the capitalised `K7`, `K3` as the rate
/// constants `k7`, `k3`. Requires `P_CO`, `P_H2O` > 0.
pub fn proof_bound(params: &KineticParameters, cond: &Conditions) -> Result<f64> {
    let coeffs = aggregate(params, cond)?;
    let eps = coeffs.smallness()?;
    if cond.p_h2o == 0.0 {
        return Err(Error::DegenerateConditions("bound needs P_H2O > 0".into()));
    }
    let k = params.constants(cond.temperature);
    let ratio = k.k7 * k.k2.sqrt() / (k.k3 * k.k1) / cond.p_co;
    let b = coeffs.alpha1 * (cond.p_h2o / (k.k2 * k.k2 * k.k4 * k.k5 * k.k6)) * ratio.powi(4);
    Ok(eps.powi(4) / b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub p_h2: f64,
    pub s: f64,
    pub s_over_p_h2_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTable {
    pub rows: Vec<ProbeRow>,
    /// Log-log slope over the two lowest decades of `P_H2`.
    pub small_slope: f64,
    /// Log-log slope over the highest decade of `P_H2`.
    pub large_slope: f64,
}

/// Solves the site balance along a `P_H2` sweep with the other conditions fixed.
pub fn asymptotic_probe(
    params: &KineticParameters,
    template: &Conditions,
    pressures: &[f64],
    tol: f64,
) -> Result<ProbeTable> {
    if !(template.p_co > 0.0 && template.p_h2o > 0.0) {
        return Err(Error::InvalidConditions(
            "probe needs P_CO > 0 and P_H2O > 0".into(),
        ));
    }
    let mut rows = Vec::with_capacity(pressures.len());
    for &p in pressures {
        let cond = Conditions { p_h2: p, ..*template };
        let sol = solve_site_fraction(params, &cond, tol)?;
        rows.push(ProbeRow {
            p_h2: p,
            s: sol.s,
            s_over_p_h2_sq: sol.s / (p * p),
        });
    }
    let lo = pressures.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = pressures.iter().cloned().fold(0.0, f64::max);
    let fit = |keep: &dyn Fn(f64) -> bool| {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            rows.iter().filter(|r| keep(r.p_h2)).map(|r| (r.p_h2, r.s)).unzip();
        if xs.len() < 2 {
            f64::NAN
        } else {
            loglog_slope(&xs, &ys)
        }
    };
    let small_slope = fit(&|p| p <= lo * 100.0 * (1.0 + 1e-12));
    let large_slope = fit(&|p| p >= hi / 10.0 * (1.0 - 1e-12));
    Ok(ProbeTable {
        rows,
        small_slope,
        large_slope,
    })
}
