use std::path::PathBuf;

use thiserror::Error;

use crate::pellet::{Profile, SolveReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate conditions: {0}")]
    DegenerateConditions(String),

    #[error("vacant-site fraction must be positive, got {0}")]
    InvalidSite(f64),

    #[error("chain index must be at least 2, got {0}")]
    InvalidChainIndex(usize),

    #[error("geometric tail diverges: ratio {0} is not in [0, 1)")]
    TailDiverges(f64),

    #[error("site balance could not be bracketed: {0}")]
    NoBracket(String),

    #[error("target site fraction {target} is outside the range of the transform ({lower}, {upper}]")]
    OutOfRange { target: f64, lower: f64, upper: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid conditions: {0}")]
    InvalidConditions(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("linear system is singular at row {row}")]
    SingularSystem { row: usize },

    #[error("initial guess did not settle within {iterations} iterations")]
    GuessFailed {
        iterations: usize,
        profile: Box<Profile>,
        report: Box<SolveReport>,
    },

    #[error("no rate at the pellet surface; effectiveness factor undefined")]
    ZeroSurfaceRate,

    #[error("total production is zero")]
    ZeroDenominator,

    #[error("boundary value of species {0} is zero")]
    ZeroBoundary(&'static str),

    #[error("profiles are defined on different grids ({0} vs {1} points)")]
    GridMismatch(usize, usize),

    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
