//! Versioned JSON run configurations.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use hypodist::io::load_function;
use hypodist::{empirical_cdf, CdfSpec, Domain, GridFunction, Grid, SampleSet, ShapeConstraints};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DomainConfig {
    pub fn build(&self) -> Result<Domain, CliError> {
        Domain::new(self.lower.clone(), self.upper.clone()).map_err(|e| CliError::Config(format!("domain: {e}")))
    }
}

impl From<&Domain> for DomainConfig {
    fn from(d: &Domain) -> Self {
        Self {
            lower: d.lower().to_vec(),
            upper: d.upper().to_vec(),
        }
    }
}

/// Where a function comes from. Relative paths resolve against the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSource {
    Cdf { spec: CdfSpec },
    /// Headerless CSV of sample points; the empirical CDF is used.
    Samples { path: PathBuf },
    /// Values CSV plus metadata JSON as written by `estimate`.
    GridFunction { csv: PathBuf, meta: PathBuf },
}

impl FunctionSource {
    pub fn load(&self, grid: &Arc<Grid>, base: &Path) -> Result<GridFunction, CliError> {
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        match self {
            FunctionSource::Cdf { spec } => Ok(spec.realize(grid.clone())?),
            FunctionSource::Samples { path } => {
                let path = resolve(path);
                let file = std::fs::File::open(&path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                let samples = SampleSet::read_csv(file)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                Ok(empirical_cdf(&samples, grid.clone())?)
            }
            FunctionSource::GridFunction { csv, meta } => {
                let f = load_function(&resolve(csv), &resolve(meta))
                    .map_err(|e| CliError::Config(format!("grid function: {e}")))?;
                if f.grid() == grid.as_ref() {
                    Ok(f)
                } else {
                    Ok(f.resample(grid.clone())?)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub version: u32,
    pub domain: DomainConfig,
    pub cells_per_axis: usize,
    pub f0: FunctionSource,
    pub g0: FunctionSource,
    pub delta: f64,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub shape: ShapeConstraints,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Per-LP simplex iteration cap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_lp_iterations: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceConfig {
    pub version: u32,
    pub domain: DomainConfig,
    pub cells_per_axis: usize,
    pub f: FunctionSource,
    pub g: FunctionSource,
    pub rho_values: Vec<f64>,
    #[serde(default = "default_oracle_samples")]
    pub oracle_samples: usize,
    #[serde(default = "default_quad_points")]
    pub quad_points: usize,
    #[serde(default = "default_metric_tol")]
    pub tol: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub version: u32,
    pub domain: DomainConfig,
    pub levels: Vec<usize>,
    pub f0: FunctionSource,
    pub g0: FunctionSource,
    pub delta: f64,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub shape: ShapeConstraints,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_quad_points")]
    pub quad_points: usize,
    #[serde(default = "default_oracle_samples")]
    pub oracle_samples: usize,
    #[serde(default = "default_budget")]
    pub rectangle_budget: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub version: u32,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default = "default_validate_cells")]
    pub cells_per_axis: usize,
    #[serde(default = "default_pairs")]
    pub lipschitz_pairs: usize,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_oracle_samples")]
    pub oracle_samples: usize,
    #[serde(default = "default_metric_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            pairs: default_pairs(),
            cells_per_axis: default_validate_cells(),
            lipschitz_pairs: default_pairs(),
            kappa: default_kappa(),
            oracle_samples: default_oracle_samples(),
            tol: default_metric_tol(),
            seed: None,
            output_dir: None,
        }
    }
}

fn default_tol() -> f64 {
    1e-8
}
fn default_metric_tol() -> f64 {
    1e-9
}
fn default_oracle_samples() -> usize {
    21
}
fn default_quad_points() -> usize {
    32
}
fn default_budget() -> u64 {
    5_000_000
}
fn default_pairs() -> usize {
    20
}
fn default_validate_cells() -> usize {
    10
}
fn default_kappa() -> f64 {
    1.0
}

/// Parses a config and checks its schema version; serde errors carry line and column.
pub fn read_config<T: DeserializeOwned + Versioned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cfg: T = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if cfg.version() != CONFIG_VERSION {
        return Err(CliError::Config(format!(
            "{}: unsupported config version {} (expected {CONFIG_VERSION})",
            path.display(),
            cfg.version()
        )));
    }
    Ok(cfg)
}

pub trait Versioned {
    fn version(&self) -> u32;
}

macro_rules! versioned {
    ($($t:ty),*) => {$(
        impl Versioned for $t {
            fn version(&self) -> u32 {
                self.version
            }
        }
    )*};
}
versioned!(EstimateConfig, DistanceConfig, StudyConfig, ValidateConfig);
