//! Run configuration file.

use std::fs;
use std::path::{Path, PathBuf};

use broadwell::data::{BoundaryData, DataSpec};
use broadwell::picard::SolveConfig;
use broadwell::transport::QuadratureSpec;
use broadwell::{Error, GridSpec, ModelParams, SpaceTimeBox};
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDims {
    pub nt: usize,
    pub nx: usize,
    pub ny: usize,
}

impl GridDims {
    pub fn spec(&self, domain: SpaceTimeBox) -> Result<GridSpec, Error> {
        GridSpec::new(self.nt, self.nx, self.ny, domain)
    }

    /// Halves every spacing.
    pub fn refined(&self) -> GridDims {
        GridDims {
            nt: 2 * self.nt - 1,
            nx: 2 * self.nx - 1,
            ny: 2 * self.ny - 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// First-order upwind finite differences.
    #[default]
    Upwind,
    /// Exact collisionless solution; only meaningful with `S = 0`.
    FreeStreaming,
    /// The characteristic solver itself.
    Picard,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Largest accepted sup-difference on the finest level.
    pub threshold: f64,
    pub cfl: f64,
    pub reference: Reference,
    /// Grid of the reference solution; defaults to the solver grid.
    pub reference_grid: Option<GridDims>,
    /// Also run on the grid with every spacing halved and record the error ratio.
    pub refine: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            threshold: 1e-2,
            cfl: 0.9,
            reference: Reference::Upwind,
            reference_grid: None,
            refine: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub params: ModelParams,
    #[serde(rename = "box")]
    pub domain: SpaceTimeBox,
    pub grid: GridDims,
    /// Largest quadrature step; defaults to one step per grid cell crossed.
    #[serde(default)]
    pub quadrature_step: Option<f64>,
    #[serde(default)]
    pub solve: SolveConfig,
    /// Inline data description.
    #[serde(default)]
    pub data: Option<DataSpec>,
    /// Data description in a separate JSON file, relative to this config.
    #[serde(default)]
    pub data_file: Option<PathBuf>,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub snapshots: Option<Vec<usize>>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path)?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Error> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Usage(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.grid()?;
        self.quadrature()?;
        self.solve.validate()?;
        if self.data.is_some() == self.data_file.is_some() {
            return Err(Error::Usage(
                "give exactly one of data and data_file".into(),
            ));
        }
        let v = &self.verify;
        if !(v.threshold >= 0.0) {
            return Err(Error::Usage(format!(
                "verify.threshold must be non-negative, got {}",
                v.threshold
            )));
        }
        if !(v.cfl > 0.0 && v.cfl <= 1.0) {
            return Err(Error::Usage(format!(
                "verify.cfl must lie in (0, 1], got {}",
                v.cfl
            )));
        }
        if let Some(g) = v.reference_grid {
            g.spec(self.domain)?;
        }
        if let Some(snaps) = &self.snapshots {
            self.check_snapshots(snaps)?;
        }
        Ok(())
    }

    pub fn check_snapshots(&self, snaps: &[usize]) -> Result<(), Error> {
        match snaps.iter().find(|&&n| n >= self.grid.nt) {
            Some(n) => Err(Error::Usage(format!(
                "snapshot index {n} out of range (nt = {})",
                self.grid.nt
            ))),
            None => Ok(()),
        }
    }

    pub fn grid(&self) -> Result<GridSpec, Error> {
        self.grid.spec(self.domain)
    }

    pub fn quadrature_for(&self, grid: &GridSpec) -> Result<QuadratureSpec, Error> {
        match self.quadrature_step {
            Some(h) => QuadratureSpec::new(h),
            None => Ok(QuadratureSpec::for_grid(grid, &self.params)),
        }
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec, Error> {
        self.quadrature_for(&self.grid()?)
    }

    pub fn boundary_data(&self) -> Result<BoundaryData, Error> {
        let spec = match (&self.data, &self.data_file) {
            (Some(spec), _) => spec.clone(),
            (None, Some(file)) => {
                let path = self.base_dir.join(file);
                serde_json::from_str(&fs::read_to_string(path)?)?
            }
            (None, None) => return Err(Error::Usage("no data given".into())),
        };
        spec.build(&self.params, self.domain, &self.base_dir)
    }
}
