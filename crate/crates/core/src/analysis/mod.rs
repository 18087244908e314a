//! Cubic elastic constants, anisotropy measures and trend fits.

mod fit;
mod surface;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::homogenize::{MaterialSpec, StiffnessMatrix};
use crate::{Error, Result};

pub use fit::{fit_polynomial, fit_power_law, FitModel, FitResult};
pub use surface::{compliance, directional_modulus, icosphere, ymsurface_mesh, Compliance};

/// Lower edge of the isotropic-ish region around `Z = 1`.
pub const NEO_LOW: f64 = 0.900;
pub const PERFECT_LOW: f64 = 0.950;
pub const PERFECT_HIGH: f64 = 1.050;
pub const NEO_HIGH: f64 = 1.100;

/// The three independent constants of a cubic stiffness, in GPa.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicConstants {
    pub c11: f64,
    pub c12: f64,
    pub c44: f64,
    /// Largest departure of the source matrix from the cubic template, relative to `c11`.
    pub deviation: f64,
}

impl CubicConstants {
    pub fn new(c11: f64, c12: f64, c44: f64) -> Self {
        Self {
            c11,
            c12,
            c44,
            deviation: 0.0,
        }
    }

    /// Isotropic constants of a material.
    pub fn isotropic(mat: &MaterialSpec) -> Self {
        let c = StiffnessMatrix::isotropic(mat);
        Self::new(c.c[0][0], c.c[0][1], c.c[3][3])
    }

    /// Full 6x6 matrix with the cubic pattern.
    pub fn template(&self) -> [[f64; 6]; 6] {
        let mut t = [[0.0; 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                t[i][j] = if i == j { self.c11 } else { self.c12 };
            }
            t[i + 3][i + 3] = self.c44;
        }
        t
    }
}

/// Averages the cubic entries of `c` and measures how far the rest departs
/// from the cubic pattern.
pub fn cubic_project(c: &StiffnessMatrix) -> Result<CubicConstants> {
    let m = &c.c;
    let c11 = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let c12 = (m[0][1] + m[0][2] + m[1][2]) / 3.0;
    let c44 = (m[3][3] + m[4][4] + m[5][5]) / 3.0;
    if !(c11 > c12.abs()) {
        return Err(Error::DegenerateInput(format!("c11 = {c11} must exceed |c12| = {}", c12.abs())));
    }
    let mut cc = CubicConstants::new(c11, c12, c44);
    let t = cc.template();
    cc.deviation = (0..6)
        .flat_map(|i| (0..6).map(move |j| (i, j)))
        .map(|(i, j)| (m[i][j] - t[i][j]).abs() / c11)
        .fold(0.0, f64::max);
    Ok(cc)
}

/// Young's modulus along a cube axis, GPa.
pub fn modulus_axis(cc: &CubicConstants) -> Result<f64> {
    let (a, b) = (cc.c11, cc.c12);
    if !(a > b.abs()) {
        return Err(Error::DegenerateInput(format!("c11 = {a} must exceed |c12| = {}", b.abs())));
    }
    Ok((a.powi(3) + 2.0 * b.powi(3) - 3.0 * a * b * b) / (a * a - b * b))
}

/// Zener ratio `2 c44 / (c11 - c12)`.
pub fn zener(cc: &CubicConstants) -> Result<f64> {
    let shear = (cc.c11 - cc.c12) / 2.0;
    if shear == 0.0 {
        return Err(Error::DegenerateInput("c11 equals c12".into()));
    }
    Ok(cc.c44 / shear)
}

pub fn normalized_modulus(e_gpa: f64, e_s_gpa: f64) -> f64 {
    e_gpa / e_s_gpa
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnisotropyClass {
    /// Stiffest along the cube axes (`Z` below the neo-isotropic band).
    #[serde(rename = "TCD")]
    Tcd,
    NeoIsotropic,
    PerfectlyIsotropic,
    /// Stiffest along the body diagonals.
    #[serde(rename = "SD")]
    Sd,
}

impl AnisotropyClass {
    pub const ALL: [AnisotropyClass; 4] = [Self::Tcd, Self::NeoIsotropic, Self::PerfectlyIsotropic, Self::Sd];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Tcd => "TCD",
            Self::NeoIsotropic => "NeoIsotropic",
            Self::PerfectlyIsotropic => "PerfectlyIsotropic",
            Self::Sd => "SD",
        }
    }
}

impl fmt::Display for AnisotropyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnisotropyClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown anisotropy class {s:?}")))
    }
}

/// Band classification of a Zener ratio. The shared endpoints 0.95 and 1.05
/// belong to the neo-isotropic bands.
pub fn classify(z: f64) -> AnisotropyClass {
    if z > PERFECT_LOW && z < PERFECT_HIGH {
        AnisotropyClass::PerfectlyIsotropic
    } else if (NEO_LOW..=PERFECT_LOW).contains(&z) || (PERFECT_HIGH..=NEO_HIGH).contains(&z) {
        AnisotropyClass::NeoIsotropic
    } else if z < NEO_LOW {
        AnisotropyClass::Tcd
    } else {
        AnisotropyClass::Sd
    }
}

/// Everything reported for one evaluated design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnisotropyReport {
    pub design_name: String,
    pub resolution: usize,
    pub rho_bar: f64,
    pub s_bar: f64,
    /// Surface area per cell volume, mm^-1.
    pub s_bar_cell: f64,
    pub cubic: CubicConstants,
    pub e_gpa: f64,
    pub e_bar: f64,
    pub zener: f64,
    pub class: AnisotropyClass,
    pub bc_family: String,
    pub material: MaterialSpec,
    pub asymmetry: f64,
}

impl AnisotropyReport {
    pub const CSV_HEADER: [&'static str; 13] = [
        "name", "n", "rho_bar", "s_bar", "c11", "c12", "c44", "e_gpa", "e_bar", "zener", "class", "bc_family", "s_bar_cell",
    ];

    /// Derives the cubic measures from a homogenized stiffness.
    pub fn from_stiffness(
        design_name: impl Into<String>,
        stiffness: &StiffnessMatrix,
        material: &MaterialSpec,
        resolution: usize,
        metrics: &crate::voxel::SurfaceMetrics,
        bc_family: impl Into<String>,
    ) -> Result<Self> {
        let cubic = cubic_project(stiffness)?;
        let e_gpa = modulus_axis(&cubic)?;
        let z = zener(&cubic)?;
        Ok(Self {
            design_name: design_name.into(),
            resolution,
            rho_bar: metrics.rho_bar,
            s_bar: metrics.s_bar,
            s_bar_cell: metrics.s_bar_cell,
            cubic,
            e_gpa,
            e_bar: normalized_modulus(e_gpa, material.youngs_modulus_gpa),
            zener: z,
            class: classify(z),
            bc_family: bc_family.into(),
            material: *material,
            asymmetry: stiffness.asymmetry,
        })
    }

    /// Values in `CSV_HEADER` order.
    pub fn csv_record(&self) -> Vec<String> {
        let g = |v: f64| format!("{v:.9e}");
        vec![
            self.design_name.clone(),
            self.resolution.to_string(),
            g(self.rho_bar),
            g(self.s_bar),
            g(self.cubic.c11),
            g(self.cubic.c12),
            g(self.cubic.c44),
            g(self.e_gpa),
            g(self.e_bar),
            g(self.zener),
            self.class.to_string(),
            self.bc_family.clone(),
            g(self.s_bar_cell),
        ]
    }
}
