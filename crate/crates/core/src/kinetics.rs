//! CO-insertion microkinetics: aggregated coefficients, chain-growth
//! probabilities, product rates and the truncated-sum tail corrections.
//!
//! Olefin rates carry the factor `exp(-n c)` with `c = dE/(RT) > 0`, the same
//! factor that appears in the growth probabilities. The olefin tail therefore
//! decays with ratio `alpha * exp(-c)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Conditions, KineticParameters};

/// Cumulative products below this value are continued in log space.
const LOG_SPACE_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregatedCoefficients {
    pub kappa_growth: f64,
    pub kappa_par_long: f64,
    pub kappa_ole_long: f64,
    pub kappa_par_short: f64,
    pub kappa_ole_short: f64,
    pub c: f64,
    pub c0: f64,
    pub c_s: f64,
    pub alpha1: f64,
    /// `kappa_par_long / kappa_growth`; infinite when there is no CO.
    pub epsilon: f64,
    pub alpha_inf: f64,
}

impl AggregatedCoefficients {
    /// Olefin termination constant for chain length `n`.
    pub fn kappa_ole(&self, n: usize) -> f64 {
        if n == 2 {
            self.kappa_ole_short
        } else {
            self.kappa_ole_long
        }
    }

    /// The smallness parameter, or an error when it is infinite.
    pub fn smallness(&self) -> Result<f64> {
        if self.kappa_growth == 0.0 {
            return Err(Error::DegenerateConditions(
                "epsilon is infinite without CO".into(),
            ));
        }
        Ok(self.epsilon)
    }

    /// `alpha_n` with the validity checks done by [`alpha_n`].
    #[inline]
    pub(crate) fn alpha_unchecked(&self, s: f64, n: usize) -> f64 {
        let g = self.kappa_growth;
        if g == 0.0 {
            return 0.0;
        }
        g / (g + self.kappa_par_long + (-(n as f64) * self.c).exp() * self.kappa_ole(n) / s)
    }
}

pub fn aggregate(params: &KineticParameters, cond: &Conditions) -> Result<AggregatedCoefficients> {
    cond.validate()?;
    let k = params.constants(cond.temperature);
    let Conditions {
        p_co, p_h2, p_h2o, ..
    } = *cond;

    if p_h2 == 0.0 && p_h2o > 0.0 {
        return Err(Error::DegenerateConditions(
            "P_H2 = 0 with P_H2O > 0 makes c_S infinite".into(),
        ));
    }

    let sqrt_h2 = (k.k2 * p_h2).sqrt();
    let c0 = 1.0 + k.k1 * p_co + sqrt_h2;
    let water = if p_h2o == 0.0 {
        0.0
    } else {
        p_h2o / (k.k2 * k.k2 * k.k4 * k.k5 * k.k6 * p_h2 * p_h2)
    };
    let c_s = water + sqrt_h2;

    let kappa_growth = k.k3 * k.k1 * p_co;
    let kappa_par_long = k.k7 * sqrt_h2;
    let kappa_par_short = k.k7m * sqrt_h2;

    let alpha1 = if kappa_growth == 0.0 {
        0.0
    } else {
        kappa_growth / (kappa_growth + kappa_par_short)
    };
    let (epsilon, alpha_inf) = if kappa_growth == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let eps = kappa_par_long / kappa_growth;
        (eps, 1.0 / (1.0 + eps))
    };

    Ok(AggregatedCoefficients {
        kappa_growth,
        kappa_par_long,
        kappa_ole_long: k.k8_0,
        kappa_par_short,
        kappa_ole_short: k.k8e_0,
        c: k.c,
        c0,
        c_s,
        alpha1,
        epsilon,
        alpha_inf,
    })
}

/// Chain-growth probability of a chain with `n >= 2` carbons at site fraction `s`.
pub fn alpha_n(coeffs: &AggregatedCoefficients, s: f64, n: usize) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::InvalidSite(s));
    }
    if n < 2 {
        return Err(Error::InvalidChainIndex(n));
    }
    Ok(coeffs.alpha_unchecked(s, n))
}

/// `L(x, N0) = (N0 + 1/(1-x)) x/(1-x)`, the closed form of `sum_{k>=1} (N0+k) x^k`.
pub fn l_function(x: f64, n0: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::TailDiverges(x));
    }
    let q = 1.0 / (1.0 - x);
    Ok((n0 as f64 + q) * x * q)
}

/// Running product `alpha_1 * ... * alpha_n`, switching to logs before underflow.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CumulativeProduct {
    value: f64,
    log: f64,
    in_log: bool,
}

impl CumulativeProduct {
    pub(crate) fn new(first: f64) -> Self {
        Self {
            value: first,
            log: first.ln(),
            in_log: first < LOG_SPACE_THRESHOLD,
        }
    }

    pub(crate) fn push(&mut self, factor: f64) {
        self.log += factor.ln();
        if !self.in_log {
            self.value *= factor;
            if self.value < LOG_SPACE_THRESHOLD {
                self.in_log = true;
            }
        }
    }

    /// `scale * product`, computed in log space once the product is tiny.
    pub(crate) fn scaled(&self, scale: f64) -> f64 {
        if self.in_log {
            if scale == 0.0 {
                0.0
            } else {
                (self.log + scale.ln()).exp()
            }
        } else {
            scale * self.value
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCorrections {
    pub delta_co: f64,
    pub delta_h2: f64,
    /// Molar paraffin production beyond `N_max`.
    pub paraffin_molar: f64,
    /// Molar olefin production beyond `N_max`.
    pub olefin_molar: f64,
    pub paraffin_ratio: f64,
    pub olefin_ratio: f64,
}

impl TailCorrections {
    pub fn zero() -> Self {
        Self {
            delta_co: 0.0,
            delta_h2: 0.0,
            paraffin_molar: 0.0,
            olefin_molar: 0.0,
            paraffin_ratio: 0.0,
            olefin_ratio: 0.0,
        }
    }
}

/// Tail corrections from the last explicit rates and the geometric ratios of
/// the paraffin and olefin tails.
pub fn tail_from_ratios(
    r_par_last: f64,
    paraffin_ratio: f64,
    r_ole_last: f64,
    olefin_ratio: f64,
    n0: usize,
) -> Result<TailCorrections> {
    let l_par = l_function(paraffin_ratio, n0)?;
    let l_ole = l_function(olefin_ratio, n0)?;
    let geo_par = paraffin_ratio / (1.0 - paraffin_ratio);
    let geo_ole = olefin_ratio / (1.0 - olefin_ratio);
    Ok(TailCorrections {
        delta_co: l_par * r_par_last + l_ole * r_ole_last,
        delta_h2: 2.0 * l_par * r_par_last + r_par_last * geo_par + 2.0 * l_ole * r_ole_last,
        paraffin_molar: r_par_last * geo_par,
        olefin_molar: r_ole_last * geo_ole,
        paraffin_ratio,
        olefin_ratio,
    })
}

/// Corrections for truncating the stoichiometric sums at `n_max`.
pub fn tail_corrections(
    coeffs: &AggregatedCoefficients,
    s: f64,
    n_max: usize,
) -> Result<TailCorrections> {
    let bundle = product_rates(coeffs, s, n_max)?;
    Ok(bundle.tail)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateBundle {
    /// `R_{CnH2n+2}` for n = 1..=N_max (index n-1).
    pub paraffins: Vec<f64>,
    /// `R_{CnH2n}` for n = 2..=N_max (index n-2).
    pub olefins: Vec<f64>,
    /// Net CO rate, negative for consumption.
    pub r_co: f64,
    /// Net H2 rate, negative for consumption.
    pub r_h2: f64,
    pub tail: TailCorrections,
}

impl RateBundle {
    pub fn zero(n_max: usize) -> Self {
        Self {
            paraffins: vec![0.0; n_max],
            olefins: vec![0.0; n_max.saturating_sub(1)],
            r_co: 0.0,
            r_h2: 0.0,
            tail: TailCorrections::zero(),
        }
    }

    pub fn n_max(&self) -> usize {
        self.paraffins.len()
    }

    pub fn paraffin(&self, n: usize) -> f64 {
        self.paraffins[n - 1]
    }

    pub fn olefin(&self, n: usize) -> f64 {
        self.olefins[n - 2]
    }

    /// Molar production of chains with at least `n_min` carbons, tails included.
    pub fn molar_production_from(&self, n_min: usize) -> f64 {
        let par: f64 = self.paraffins.iter().skip(n_min.saturating_sub(1)).sum();
        let ole: f64 = self.olefins.iter().skip(n_min.max(2) - 2).sum();
        par + ole + self.tail.paraffin_molar + self.tail.olefin_molar
    }
}

/// Per-product and total rates at site fraction `s`.
pub fn product_rates(coeffs: &AggregatedCoefficients, s: f64, n_max: usize) -> Result<RateBundle> {
    if !(s > 0.0) {
        return Err(Error::InvalidSite(s));
    }
    if n_max < 2 {
        return Err(Error::InvalidChainIndex(n_max));
    }
    if coeffs.alpha1 == 0.0 {
        return Ok(RateBundle::zero(n_max));
    }

    let s2 = s * s;
    let mut paraffins = Vec::with_capacity(n_max);
    let mut olefins = Vec::with_capacity(n_max - 1);
    paraffins.push(coeffs.kappa_par_short * coeffs.alpha1 * s2);

    let mut product = CumulativeProduct::new(coeffs.alpha1);
    for n in 2..=n_max {
        product.push(coeffs.alpha_unchecked(s, n));
        paraffins.push(product.scaled(coeffs.kappa_par_long * s2));
        let ole_scale = coeffs.kappa_ole(n) * s * (-(n as f64) * coeffs.c).exp();
        olefins.push(product.scaled(ole_scale));
    }

    let alpha_next = coeffs.alpha_unchecked(s, n_max + 1);
    let tail = tail_from_ratios(
        paraffins[n_max - 1],
        alpha_next,
        olefins[n_max - 2],
        alpha_next * (-coeffs.c).exp(),
        n_max,
    )?;

    let mut co = tail.delta_co;
    let mut h2 = tail.delta_h2;
    for (i, r) in paraffins.iter().enumerate() {
        let n = (i + 1) as f64;
        co += n * r;
        h2 += (2.0 * n + 1.0) * r;
    }
    for (i, r) in olefins.iter().enumerate() {
        let n = (i + 2) as f64;
        co += n * r;
        h2 += 2.0 * n * r;
    }

    Ok(RateBundle {
        paraffins,
        olefins,
        r_co: -co,
        r_h2: -h2,
        tail,
    })
}
