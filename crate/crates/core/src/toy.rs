//! One-dimensional toy problem `c'' = -s(c)`, `c'(0) = 0`, `c(1) = 1`, with an
//! exact linear sink and two approximations that are wrong only near `c = 0`.
//!
//! The solver does not clamp negative concentrations here.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pellet::laplacian::{Geometry, Laplacian};
use crate::pellet::stepping::{self, ReactionSystem, RefineOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToyVariant {
    Exact,
    Approx1,
    Approx2,
}

impl ToyVariant {
    pub const ALL: [ToyVariant; 3] = [ToyVariant::Exact, ToyVariant::Approx1, ToyVariant::Approx2];
}

impl fmt::Display for ToyVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ToyVariant::Exact => "exact",
            ToyVariant::Approx1 => "approx1",
            ToyVariant::Approx2 => "approx2",
        })
    }
}

impl FromStr for ToyVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ToyVariant::Exact),
            "approx1" => Ok(ToyVariant::Approx1),
            "approx2" => Ok(ToyVariant::Approx2),
            other => Err(Error::InvalidParameter(format!("unknown toy variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToySource {
    pub variant: ToyVariant,
    pub k: f64,
    pub theta: f64,
}

impl ToySource {
    pub fn new(variant: ToyVariant) -> Self {
        Self {
            variant,
            k: 50.0,
            theta: 0.04,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidParameter(format!("k must be positive, got {}", self.k)));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in (0, 1), got {}",
                self.theta
            )));
        }
        Ok(())
    }

    pub fn eval(&self, c: f64) -> f64 {
        toy_source(self.variant, self.k, self.theta, c)
    }

    /// `cosh(x sqrt(k)) / cosh(sqrt(k))`, the solution for the exact sink.
    pub fn exact_solution(&self, x: f64) -> f64 {
        let r = self.k.sqrt();
        (x * r).cosh() / r.cosh()
    }
}

pub fn toy_source(variant: ToyVariant, k: f64, theta: f64, c: f64) -> f64 {
    match variant {
        ToyVariant::Exact => -k * c,
        ToyVariant::Approx1 => -k * if c < theta { theta } else { c },
        ToyVariant::Approx2 => {
            -k * if c < 0.0 {
                c.abs() / 25.0
            } else if c < theta {
                theta
            } else {
                c
            }
        }
    }
}

struct ToySystem {
    source: ToySource,
    lap: Laplacian,
    bc: [f64; 1],
}

impl ReactionSystem for ToySystem {
    fn species(&self) -> usize {
        1
    }

    fn laplacian(&self) -> &Laplacian {
        &self.lap
    }

    fn boundary(&self) -> &[f64] {
        &self.bc
    }

    fn source(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = self.source.eval(w[0]);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySolution {
    pub variant: ToyVariant,
    pub x: Vec<f64>,
    pub c: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    /// Smallest and largest concentration the source was evaluated at.
    pub c_range: (f64, f64),
}

impl ToySolution {
    pub fn min(&self) -> f64 {
        self.c.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Solves the planar toy problem from `c = 1` with the pellet refinement
/// iteration, negativity allowed.
pub fn solve_toy(source: &ToySource, n_grid: usize, tol: f64) -> Result<ToySolution> {
    let opts = RefineOptions {
        tol,
        ..toy_refine_options()
    };
    solve_toy_with(source, n_grid, &opts)
}

/// Refinement settings used by [`solve_toy`].
pub fn toy_refine_options() -> RefineOptions {
    RefineOptions {
        enforce_nonnegative: false,
        ..RefineOptions::default()
    }
}

pub fn solve_toy_with(source: &ToySource, n_grid: usize, opts: &RefineOptions) -> Result<ToySolution> {
    source.validate()?;
    if n_grid < 3 {
        return Err(Error::InvalidParameter(format!("n_grid must be at least 3, got {n_grid}")));
    }
    let sys = ToySystem {
        source: *source,
        lap: Laplacian::new(n_grid, Geometry::Planar),
        bc: [1.0],
    };
    let tau0 = stepping::initial_tau(&sys, 0.1)?.unwrap_or(1.0);
    let start = stepping::constant_fields(&sys);
    let run = stepping::refine(&sys, &start, tau0, opts)?;
    let c = run.fields[0].clone();
    let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(ToySolution {
        variant: source.variant,
        x: sys.lap.grid(),
        c,
        converged: run.converged,
        iterations: run.iterations,
        residual_norm: run.residual_norm,
        c_range: (lo, hi),
    })
}

/// `(c, s(c))` pairs on an even grid.
pub fn source_table(source: &ToySource, c_min: f64, c_max: f64, n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 2);
    (0..n)
        .map(|i| {
            let c = c_min + (c_max - c_min) * i as f64 / (n - 1) as f64;
            (c, source.eval(c))
        })
        .collect()
}
