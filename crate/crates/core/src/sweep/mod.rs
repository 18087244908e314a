//! End-to-end evaluation of designs and parameter studies over them.

mod plan;

use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::AnisotropyReport;
use crate::geometry::{build_unit_cell, NestedLatticeSpec, StrutModel};
use crate::homogenize::{homogenize_with, HomogenizeOptions};
use crate::voxel::{relative_density, surface_metrics_with_grid, voxelize};
use crate::{Error, Result};

pub use plan::{apply_point, ParamPath, SweepAxis, SweepPlan};

/// Default resolution for parameter studies.
pub const DEFAULT_SWEEP_RESOLUTION: usize = 48;
pub const DEFAULT_DENSITY_TOL: f64 = 0.002;
/// Bisection stops once the diameter bracket is narrower than this, mm.
pub const DIAMETER_FLOOR_MM: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Geometry,
    Voxel,
    Homogenize,
    Metrics,
    Analysis,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Geometry => "geometry",
            Stage::Voxel => "voxel",
            Stage::Homogenize => "homogenize",
            Stage::Metrics => "metrics",
            Stage::Analysis => "analysis",
        })
    }
}

/// An upstream error tagged with the pipeline stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("{stage}: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, PipelineError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

/// Spec to anisotropy report: fold, voxelize, homogenize, measure, classify.
pub fn run_pipeline(
    spec: &NestedLatticeSpec,
    resolution: usize,
    options: &HomogenizeOptions,
) -> std::result::Result<AnisotropyReport, PipelineError> {
    let model = build_unit_cell(spec).at(Stage::Geometry)?;
    run_model_pipeline(&model, resolution, options)
}

/// Same as [`run_pipeline`] for an already built strut model.
pub fn run_model_pipeline(
    model: &StrutModel,
    resolution: usize,
    options: &HomogenizeOptions,
) -> std::result::Result<AnisotropyReport, PipelineError> {
    let grid = voxelize(model, resolution).at(Stage::Voxel)?;
    let report = homogenize_with(&grid, options).at(Stage::Homogenize)?;
    log::info!(
        "{}: n = {resolution}, iterations {:?}",
        model.name(),
        report.iterations
    );
    let metrics = surface_metrics_with_grid(model, &grid).at(Stage::Metrics)?;
    AnisotropyReport::from_stiffness(
        model.name(),
        &report.stiffness,
        &options.material,
        resolution,
        &metrics,
        report.boundary_conditions.to_string(),
    )
    .at(Stage::Analysis)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub report: AnisotropyReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub values: Vec<f64>,
    pub stage: Stage,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<ParamPath>,
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

fn number(v: f64) -> String {
    format!("{v}")
}

impl SweepResult {
    pub fn csv_header(&self) -> Vec<String> {
        self.axes
            .iter()
            .map(|a| a.to_string())
            .chain(AnisotropyReport::CSV_HEADER.iter().map(|s| s.to_string()))
            .collect()
    }

    /// Report rows prefixed by the swept values, preceded by `preamble` comment lines.
    pub fn write_csv(&self, mut w: impl Write, preamble: &[String]) -> Result<()> {
        for line in preamble {
            writeln!(w, "# {line}")?;
        }
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(self.csv_header()).map_err(csv_error)?;
        for row in &self.rows {
            let record = row.values.iter().map(|v| number(*v)).chain(row.report.csv_record());
            csv.write_record(record).map_err(csv_error)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn write_failures_csv(&self, mut w: impl Write, preamble: &[String]) -> Result<()> {
        for line in preamble {
            writeln!(w, "# {line}")?;
        }
        let mut csv = csv::Writer::from_writer(w);
        let header = self.axes.iter().map(|a| a.to_string()).chain(["stage".into(), "error".into()]);
        csv.write_record(header).map_err(csv_error)?;
        for f in &self.failures {
            let record = f.values.iter().map(|v| number(*v)).chain([f.stage.to_string(), f.message.clone()]);
            csv.write_record(record).map_err(csv_error)?;
        }
        csv.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("{other:?}")),
    }
}

/// Evaluates every grid point of the plan. Failures are collected, not
/// raised; rows come back in Cartesian order (last axis fastest) however
/// many workers run.
pub fn run_sweep(plan: &SweepPlan, workers: Option<usize>) -> Result<SweepResult> {
    plan.validate()?;
    let points = plan.points();
    let evaluate = |values: &Vec<f64>| -> std::result::Result<AnisotropyReport, PipelineError> {
        let (spec, resolution) = apply_point(plan, values).at(Stage::Geometry)?;
        run_pipeline(&spec, resolution, &plan.options)
    };
    let outcomes: Vec<_> = match workers {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            pool.install(|| points.par_iter().map(evaluate).collect())
        }
        None => points.par_iter().map(evaluate).collect(),
    };
    let mut result = SweepResult {
        axes: plan.axes.iter().map(|a| a.path).collect(),
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for (values, outcome) in points.into_iter().zip(outcomes) {
        match outcome {
            Ok(report) => result.rows.push(SweepRow { values, report }),
            Err(e) => {
                log::warn!("sweep point {values:?} failed at {}", e);
                result.failures.push(SweepFailure {
                    values,
                    stage: e.stage,
                    message: e.source.to_string(),
                })
            }
        }
    }
    Ok(result)
}

/// Diameter that gives a voxel relative density within `tol` of the target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityTarget {
    pub diameter_mm: f64,
    pub rho_bar: f64,
    pub evaluations: usize,
}

/// Bisection on a single diameter shared by every nesting order.
pub fn target_density(
    spec: &NestedLatticeSpec,
    target_rho: f64,
    d_min: f64,
    d_max: f64,
    resolution: usize,
    tol: f64,
) -> Result<DensityTarget> {
    target_density_with(|d| build_unit_cell(&spec.clone().with_uniform_diameter(d)), target_rho, d_min, d_max, resolution, tol)
}

/// Bisection over any family of models parametrised by one diameter whose
/// density grows with it.
pub fn target_density_with(
    build: impl Fn(f64) -> Result<StrutModel>,
    target_rho: f64,
    d_min: f64,
    d_max: f64,
    resolution: usize,
    tol: f64,
) -> Result<DensityTarget> {
    if !(d_min > 0.0 && d_min < d_max) {
        return Err(Error::InvalidArgument(format!("need 0 < d_min < d_max, got [{d_min}, {d_max}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut evaluations = 0;
    let mut rho_at = |d: f64| -> Result<f64> {
        evaluations += 1;
        Ok(relative_density(&voxelize(&build(d)?, resolution)?))
    };
    let (mut lo, mut hi) = (d_min, d_max);
    let (rho_lo, rho_hi) = (rho_at(lo)?, rho_at(hi)?);
    // any positive diameter gives some material, so zero is never reachable
    if target_rho <= 0.0 || target_rho < rho_lo || target_rho > rho_hi {
        return Err(Error::Unbracketed {
            target: target_rho,
            low: rho_lo,
            high: rho_hi,
        });
    }
    let mut best = if (rho_lo - target_rho).abs() <= (rho_hi - target_rho).abs() {
        (lo, rho_lo)
    } else {
        (hi, rho_hi)
    };
    while (best.1 - target_rho).abs() > tol && hi - lo > DIAMETER_FLOOR_MM {
        let mid = 0.5 * (lo + hi);
        let rho = rho_at(mid)?;
        if (rho - target_rho).abs() < (best.1 - target_rho).abs() {
            best = (mid, rho);
        }
        if rho < target_rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (best.1 - target_rho).abs() > tol {
        return Err(Error::DensityNotReached {
            target: target_rho,
            tol,
            best_diameter_mm: best.0,
            best_rho: best.1,
        });
    }
    Ok(DensityTarget {
        diameter_mm: best.0,
        rho_bar: best.1,
        evaluations,
    })
}

/// Reads a plan from TOML.
pub fn read_plan(path: impl AsRef<Path>) -> Result<SweepPlan> {
    SweepPlan::from_toml_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests;
