use std::path::{Path, PathBuf};

use serde::Deserialize;

use ftpellet::error::{Error, Result};
use ftpellet::pellet::PelletConfig;
use ftpellet::surrogate::{BackendSpec, SiteBackend};
use ftpellet::KineticParameters;

use crate::GlobalArgs;

/// Optional TOML file with the same keys as the global flags, plus a
/// `[pellet]` table overriding pellet properties.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub params: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub backend: Option<String>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub json: Option<bool>,
    pub jobs: Option<usize>,
    pub pellet: Option<PelletConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Settings after merging flags over the config file over defaults.
pub struct RunConfig {
    pub params: KineticParameters,
    pub backend: SiteBackend,
    pub backend_name: String,
    pub pellet: PelletConfig,
    pub tol: Option<f64>,
    pub grid: Option<usize>,
    pub out: Option<PathBuf>,
    pub json: bool,
    pub jobs: usize,
}

impl RunConfig {
    pub fn resolve(args: &GlobalArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let params = match args.params.as_ref().or(file.params.as_ref()) {
            Some(p) => KineticParameters::load(p)?,
            None => KineticParameters::placeholder(),
        };
        let weights = args.weights.clone().or(file.weights);
        if let Some(w) = &weights {
            if !w.is_file() {
                return Err(Error::io(w, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file")));
            }
        }
        let backend_name = args
            .backend
            .clone()
            .or(file.backend)
            .unwrap_or_else(|| "exact".to_string());
        let spec: BackendSpec = backend_name.parse()?;
        let backend = SiteBackend::from_spec(&spec, weights.as_deref())?;
        let mut pellet = file.pellet.unwrap_or_default();
        let grid = args.grid.or(file.grid);
        if let Some(n) = grid {
            pellet.n_grid = n;
        }
        pellet.validate()?;
        let tol = args.tol.or(file.tol);
        if let Some(t) = tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("tol must be positive, got {t}")));
            }
        }
        Ok(Self {
            params,
            backend,
            backend_name,
            pellet,
            tol,
            grid,
            out: args.out.clone().or(file.out),
            json: args.json || file.json.unwrap_or(false),
            jobs: args.jobs.or(file.jobs).unwrap_or(0),
        })
    }
}
