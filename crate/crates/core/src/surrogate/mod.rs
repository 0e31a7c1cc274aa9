//! Output transform `G(y)` for site-fraction surrogates and the pluggable
//! raw models behind it.
//!
//! `G` maps any non-negative raw output `y` to a site fraction that scales as
//! `P_H2^2` at small hydrogen pressure, whatever the raw model does there.

pub mod network;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use network::{Activation, Layer, Network, WeightFile};

use crate::error::{Error, Result};
use crate::kinetics::{aggregate, product_rates, AggregatedCoefficients, RateBundle};
use crate::numerics::illinois;
use crate::params::{Conditions, KineticParameters};
use crate::site::{solve_with_coeffs, DEFAULT_TOL};

/// Pressure and temperature ranges used to normalize network inputs (MPa, K).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputRanges {
    pub p_co_max: f64,
    pub p_h2_max: f64,
    pub p_h2o_max: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for InputRanges {
    fn default() -> Self {
        Self {
            p_co_max: 6.0,
            p_h2_max: 6.0,
            p_h2o_max: 6.1,
            t_min: 473.15,
            t_max: 513.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedInput {
    pub x_co: f64,
    pub x_h2: f64,
    pub x_h2o: f64,
    pub x_t: f64,
}

impl NormalizedInput {
    pub fn as_array(&self) -> [f64; 4] {
        [self.x_co, self.x_h2, self.x_h2o, self.x_t]
    }

    /// Components outside `[0, 1]`. They are passed on unchanged.
    pub fn out_of_range(&self) -> [bool; 4] {
        self.as_array().map(|v| !(0.0..=1.0).contains(&v))
    }

    pub fn is_extrapolated(&self) -> bool {
        self.out_of_range().iter().any(|&f| f)
    }
}

/// Normalizes conditions given in MPa.
pub fn normalize(cond_mpa: &Conditions, ranges: &InputRanges) -> NormalizedInput {
    NormalizedInput {
        x_co: cond_mpa.p_co / ranges.p_co_max,
        x_h2: cond_mpa.p_h2 / ranges.p_h2_max,
        x_h2o: cond_mpa.p_h2o / ranges.p_h2o_max,
        x_t: (cond_mpa.temperature - ranges.t_min) / (ranges.t_max - ranges.t_min),
    }
}

/// Naive site estimate `1/(c0 + c_S a1 (1 + y a_inf/(1 - a_inf)))`.
pub fn sigma(coeffs: &AggregatedCoefficients, y: f64) -> Result<f64> {
    let kpl = coeffs.kappa_par_long;
    if kpl == 0.0 {
        return Err(Error::DegenerateConditions("epsilon = 0".into()));
    }
    let csa = coeffs.c_s * coeffs.alpha1;
    Ok(kpl / (coeffs.c0 * kpl + csa * (kpl + coeffs.kappa_growth * y)))
}

/// `alpha_2` evaluated at site fraction `sigma_value`.
pub fn alpha2_tilde(coeffs: &AggregatedCoefficients, sigma_value: f64) -> f64 {
    let g = coeffs.kappa_growth;
    if g == 0.0 {
        return 0.0;
    }
    g / (g + coeffs.kappa_par_long + (-2.0 * coeffs.c).exp() * coeffs.kappa_ole_short / sigma_value)
}

/// `G(y)` in the cancellation-free form used everywhere in the crate.
pub fn transform_g(coeffs: &AggregatedCoefficients, y: f64) -> Result<f64> {
    let sig = sigma(coeffs, y)?;
    let a2 = alpha2_tilde(coeffs, sig);
    let kpl = coeffs.kappa_par_long;
    let csa = coeffs.c_s * coeffs.alpha1;
    Ok(kpl / (coeffs.c0 * kpl + csa * (kpl + a2 * (kpl + coeffs.kappa_growth * y))))
}

/// `G(y)` written with `a_inf/(1 - a_inf)`; kept for cross-checking.
pub fn transform_g_direct(coeffs: &AggregatedCoefficients, y: f64) -> Result<f64> {
    let sig = sigma(coeffs, y)?;
    let a2 = alpha2_tilde(coeffs, sig);
    let ai = coeffs.alpha_inf;
    Ok(1.0 / (coeffs.c0 + coeffs.c_s * coeffs.alpha1 * (1.0 + a2 + a2 * ai / (1.0 - ai) * y)))
}

/// The failure-mode transform `10^y`.
pub fn baseline_g(y: f64) -> f64 {
    10f64.powf(y)
}

/// `G(y)` as `y -> infinity`; `G` never reaches this value.
pub fn transform_g_limit(coeffs: &AggregatedCoefficients) -> f64 {
    let kpl = coeffs.kappa_par_long;
    let csa = coeffs.c_s * coeffs.alpha1;
    if csa == 0.0 || coeffs.kappa_ole_short == 0.0 {
        return 0.0;
    }
    let extra = coeffs.kappa_growth * (2.0 * coeffs.c).exp() * kpl / (coeffs.kappa_ole_short * csa);
    kpl / (coeffs.c0 * kpl + csa * (kpl + extra))
}

/// Raw output `y >= 0` with `G(y) = s_target`, to relative `tol`.
pub fn invert_g(coeffs: &AggregatedCoefficients, s_target: f64, tol: f64) -> Result<f64> {
    let g0 = transform_g(coeffs, 0.0)?;
    let g_inf = transform_g_limit(coeffs);
    if !(s_target > 0.0) || s_target > g0 * (1.0 + 4.0 * f64::EPSILON) || s_target <= g_inf {
        return Err(Error::OutOfRange {
            target: s_target,
            lower: g_inf,
            upper: g0,
        });
    }
    if s_target >= g0 {
        return Ok(0.0);
    }
    let ln_target = s_target.ln();
    let f = |v: f64| -> Result<f64> { Ok(transform_g(coeffs, v.exp_m1())?.ln() - ln_target) };

    const V_CAP: f64 = 700.0;
    let mut v_max = 1f64.ln_1p();
    let mut grow = 0;
    while f(v_max)? > 0.0 {
        v_max = (v_max * 2.0).min(V_CAP);
        grow += 1;
        if grow > 12 || (v_max == V_CAP && f(v_max)? > 0.0) {
            return Err(Error::OutOfRange {
                target: s_target,
                lower: g_inf,
                upper: g0,
            });
        }
    }
    let root = illinois(f, 0.0, v_max, tol * 1e-2, 500)?;
    Ok(root.x.exp_m1().max(0.0))
}

/// Which map turns the raw output into a site fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transform {
    Proposed,
    Baseline,
}

/// Pressures below this fraction of the range maximum were never seen by the
/// stand-in baseline model; it returns its value at the floor instead.
pub const BASELINE_TRAINING_FLOOR: f64 = 1.0 / 19.0;

/// Raw output standing in for `y -> infinity` when the exact site fraction
/// lies below the range of `G`.
pub const SATURATED_RAW_OUTPUT: f64 = 1e150;

#[derive(Debug, Clone, PartialEq)]
pub enum RawModel {
    /// `y = invert_G(S_exact)`, so `G(y)` reproduces the exact solver where
    /// `S_exact` is inside the range of `G`, and its nearest end otherwise.
    ExactInverse,
    Network(Network),
    Plateau(f64),
    /// `y = log10(S_exact)` at pressures clamped to the training floor.
    ClampedExactLog10,
}

impl RawModel {
    pub fn output(
        &self,
        params: &KineticParameters,
        cond: &Conditions,
        coeffs: &AggregatedCoefficients,
    ) -> Result<f64> {
        match self {
            RawModel::ExactInverse => {
                let s = solve_with_coeffs(coeffs, DEFAULT_TOL)?.s;
                match invert_g(coeffs, s, 1e-13) {
                    Err(Error::OutOfRange { target, upper, .. }) if target > upper => Ok(0.0),
                    Err(Error::OutOfRange { .. }) => Ok(SATURATED_RAW_OUTPUT),
                    other => other,
                }
            }
            RawModel::Network(net) => {
                let mpa = to_mpa(params, cond);
                Ok(net.infer(&normalize(&mpa, &net.input_ranges())))
            }
            RawModel::Plateau(y0) => Ok(*y0),
            RawModel::ClampedExactLog10 => {
                let r = InputRanges::default();
                let unit = params.pressure_unit;
                let floor = |p: f64, max_mpa: f64| p.max(unit.from_mpa(max_mpa * BASELINE_TRAINING_FLOOR));
                let clamped = Conditions {
                    p_co: floor(cond.p_co, r.p_co_max),
                    p_h2: floor(cond.p_h2, r.p_h2_max),
                    p_h2o: floor(cond.p_h2o, r.p_h2o_max),
                    temperature: cond.temperature,
                };
                let c = aggregate(params, &clamped)?;
                Ok(solve_with_coeffs(&c, DEFAULT_TOL)?.s.log10())
            }
        }
    }
}

fn to_mpa(params: &KineticParameters, cond: &Conditions) -> Conditions {
    let u = params.pressure_unit;
    Conditions {
        p_co: u.to_mpa(cond.p_co),
        p_h2: u.to_mpa(cond.p_h2),
        p_h2o: u.to_mpa(cond.p_h2o),
        temperature: cond.temperature,
    }
}

/// Backend selector as written on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendSpec {
    Exact,
    Weights(PathBuf),
    Plateau(f64),
    Baseline10y,
}

impl FromStr for BackendSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "exact" {
            return Ok(BackendSpec::Exact);
        }
        if s == "baseline10y" {
            return Ok(BackendSpec::Baseline10y);
        }
        if let Some(path) = s.strip_prefix("weights:") {
            if path.is_empty() {
                return Err(Error::InvalidParameter("weights: needs a path".into()));
            }
            return Ok(BackendSpec::Weights(PathBuf::from(path)));
        }
        if s == "weights" {
            return Ok(BackendSpec::Weights(PathBuf::new()));
        }
        if let Some(v) = s.strip_prefix("plateau:") {
            let y0: f64 = v
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad plateau value {v:?}")))?;
            if !(y0.is_finite() && y0 >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "plateau value must be finite and >= 0, got {y0}"
                )));
            }
            return Ok(BackendSpec::Plateau(y0));
        }
        Err(Error::InvalidParameter(format!(
            "unknown backend {s:?} (exact | weights:<path> | plateau:<y0> | baseline10y)"
        )))
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Exact => f.write_str("exact"),
            BackendSpec::Weights(p) => write!(f, "weights:{}", p.display()),
            BackendSpec::Plateau(y) => write!(f, "plateau:{y}"),
            BackendSpec::Baseline10y => f.write_str("baseline10y"),
        }
    }
}

/// Site fraction evaluated by one backend at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteEvaluation {
    pub s: f64,
    /// Raw model output, absent for the exact backend.
    pub y: Option<f64>,
    pub extrapolated: bool,
}

/// How the pellet solver obtains `[S]`.
#[derive(Debug, Clone, PartialEq)]
pub enum SiteBackend {
    Exact { tol: f64 },
    Surrogate { raw: RawModel, transform: Transform },
}

impl Default for SiteBackend {
    fn default() -> Self {
        SiteBackend::Exact { tol: DEFAULT_TOL }
    }
}

impl SiteBackend {
    /// Builds a backend; `weights` overrides the path in `weights:` and feeds
    /// `baseline10y` when given.
    pub fn from_spec(spec: &BackendSpec, weights: Option<&Path>) -> Result<Self> {
        let load = |p: &Path| Network::load(p).map(RawModel::Network);
        Ok(match spec {
            BackendSpec::Exact => SiteBackend::default(),
            BackendSpec::Weights(p) => {
                let path = weights.unwrap_or(p.as_path());
                if path.as_os_str().is_empty() {
                    return Err(Error::InvalidParameter("weights backend needs a file".into()));
                }
                SiteBackend::Surrogate {
                    raw: load(path)?,
                    transform: Transform::Proposed,
                }
            }
            BackendSpec::Plateau(y0) => SiteBackend::Surrogate {
                raw: RawModel::Plateau(*y0),
                transform: Transform::Proposed,
            },
            BackendSpec::Baseline10y => SiteBackend::Surrogate {
                raw: match weights {
                    Some(p) => load(p)?,
                    None => RawModel::ClampedExactLog10,
                },
                transform: Transform::Baseline,
            },
        })
    }

    pub fn evaluate(
        &self,
        params: &KineticParameters,
        cond: &Conditions,
        coeffs: &AggregatedCoefficients,
    ) -> Result<SiteEvaluation> {
        match self {
            SiteBackend::Exact { tol } => Ok(SiteEvaluation {
                s: solve_with_coeffs(coeffs, *tol)?.s,
                y: None,
                extrapolated: false,
            }),
            SiteBackend::Surrogate { raw, transform } => {
                let y = raw.output(params, cond, coeffs)?;
                let s = match transform {
                    Transform::Proposed => transform_g(coeffs, y)?,
                    Transform::Baseline => baseline_g(y),
                };
                let extrapolated = match raw {
                    RawModel::Network(net) => {
                        normalize(&to_mpa(params, cond), &net.input_ranges()).is_extrapolated()
                    }
                    _ => false,
                };
                Ok(SiteEvaluation {
                    s,
                    y: Some(y),
                    extrapolated,
                })
            }
        }
    }

    /// Product and consumption rates. Without CO or H2 every rate is zero.
    pub fn rates(&self, params: &KineticParameters, cond: &Conditions) -> Result<RateBundle> {
        if cond.p_co <= 0.0 || cond.p_h2 <= 0.0 {
            cond.validate()?;
            return Ok(RateBundle::zero(params.n_max));
        }
        let coeffs = aggregate(params, cond)?;
        let s = self.evaluate(params, cond, &coeffs)?.s;
        product_rates(&coeffs, s, params.n_max)
    }

    /// `(R_CO, R_H2)` only.
    pub fn consumption(&self, params: &KineticParameters, cond: &Conditions) -> Result<(f64, f64)> {
        let r = self.rates(params, cond)?;
        Ok((r.r_co, r.r_h2))
    }
}
