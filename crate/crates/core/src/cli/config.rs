//! TOML configuration of a full single-design run.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::geometry::{design, NestedLatticeSpec};
use crate::homogenize::{HomogenizeOptions, MaterialSpec, SolverOptions, DEFAULT_STRAIN};
use crate::voxel::DEFAULT_RESOLUTION;
use crate::{Error, Result};

/// Which files a run writes into its output directory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputToggles {
    pub model: bool,
    pub stiffness: bool,
    pub report: bool,
    pub stl: bool,
    pub ymsurf: bool,
    pub ymsurf_subdivisions: u32,
}

impl Default for OutputToggles {
    fn default() -> Self {
        Self {
            model: true,
            stiffness: true,
            report: true,
            stl: false,
            ymsurf: false,
            ymsurf_subdivisions: 4,
        }
    }
}

/// Either a catalog name (`design`) or an inline `spec`, never both.
///
/// ```toml
/// design = "XNFS:0-1:0-30"
/// resolution = 48
/// output_dir = "out"
///
/// [material]
/// youngs_modulus_gpa = 193.0
/// poisson_ratio = 0.28
///
/// [outputs]
/// stl = true
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<String>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_strain")]
    pub strain_magnitude: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<NestedLatticeSpec>,
    #[serde(default)]
    pub material: MaterialSpec,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub outputs: OutputToggles,
}

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

fn default_strain() -> f64 {
    DEFAULT_STRAIN
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("nestlat-out")
}

impl RunConfig {
    pub fn for_design(name: &str) -> Self {
        Self {
            design: Some(name.into()),
            resolution: DEFAULT_RESOLUTION,
            strain_magnitude: DEFAULT_STRAIN,
            output_dir: default_output_dir(),
            spec: None,
            material: MaterialSpec::default(),
            solver: SolverOptions::default(),
            outputs: OutputToggles::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::InvalidArgument(format!("run config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidArgument(format!("run config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice_spec()?;
        if self.resolution < 2 {
            return Err(Error::InvalidArgument(format!("resolution must be at least 2, got {}", self.resolution)));
        }
        if !(self.strain_magnitude > 0.0 && self.strain_magnitude.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "strain magnitude must be positive, got {}",
                self.strain_magnitude
            )));
        }
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return Err(Error::InvalidArgument(format!("solver tol must lie in (0, 1), got {}", self.solver.tol)));
        }
        self.material.validate()
    }

    /// The selected design, validated.
    pub fn lattice_spec(&self) -> Result<NestedLatticeSpec> {
        let spec = match (&self.design, &self.spec) {
            (Some(name), None) => design(name)?,
            (None, Some(spec)) => spec.clone(),
            _ => return Err(Error::InvalidArgument("give exactly one of `design` and `spec`".into())),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn homogenize_options(&self) -> HomogenizeOptions {
        HomogenizeOptions {
            material: self.material,
            strain_magnitude: self.strain_magnitude,
            solver: self.solver,
        }
    }
}
