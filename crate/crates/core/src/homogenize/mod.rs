//! Effective elastic stiffness of a voxel unit cell.
//!
//! Six linear elasticity problems are solved on the voxel grid, each with
//! boundary displacements that realise one unit macroscopic strain component
//! (normal strains with the other normal components held at zero, engineering
//! shears on the matching face pairs). The volume-averaged stress of each
//! solution is one column of the 6x6 stiffness matrix.
//!
//! Solid voxels carry the base material, void voxels a soft ersatz copy of it.
//! The discrete system is solved matrix-free with conjugate gradients,
//! preconditioned by a geometric multigrid V-cycle when the grid coarsens
//! cleanly (even resolutions) and by the diagonal otherwise.

mod element;
mod multigrid;
mod operator;
mod solver;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::voxel::VoxelGrid;

pub use element::{constitutive, hex_element_stiffness, Mat24, Mat6};

use multigrid::{constraint_mask, FaceConstraint, Hierarchy};
use operator::{to_flat, GridOperator};
use solver::{masked_inverse, pcg, Jacobi, Preconditioner};

pub const DEFAULT_STRAIN: f64 = 1e-3;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_VOID_CONTRAST: f64 = 1e-6;

/// Voigt labels in storage order.
pub const VOIGT: [&str; 6] = ["11", "22", "33", "23", "31", "12"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub youngs_modulus_gpa: f64,
    pub poisson_ratio: f64,
    #[serde(default = "default_void_contrast")]
    pub void_contrast: f64,
}

fn default_void_contrast() -> f64 {
    DEFAULT_VOID_CONTRAST
}

impl Default for MaterialSpec {
    /// 316L stainless steel.
    fn default() -> Self {
        Self {
            youngs_modulus_gpa: 193.0,
            poisson_ratio: 0.28,
            void_contrast: DEFAULT_VOID_CONTRAST,
        }
    }
}

impl MaterialSpec {
    pub fn new(youngs_modulus_gpa: f64, poisson_ratio: f64) -> Self {
        Self {
            youngs_modulus_gpa,
            poisson_ratio,
            void_contrast: DEFAULT_VOID_CONTRAST,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.youngs_modulus_gpa > 0.0 && self.youngs_modulus_gpa.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Young's modulus must be positive, got {}",
                self.youngs_modulus_gpa
            )));
        }
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "Poisson ratio must lie in (-1, 0.5), got {}",
                self.poisson_ratio
            )));
        }
        if !(self.void_contrast > 0.0 && self.void_contrast <= 1e-3) {
            return Err(Error::InvalidArgument(format!(
                "void contrast must lie in (0, 1e-3], got {}",
                self.void_contrast
            )));
        }
        Ok(())
    }
}

/// Lame constants `(lambda, mu)` in GPa.
pub fn lame_parameters(mat: &MaterialSpec) -> (f64, f64) {
    let (e, nu) = (mat.youngs_modulus_gpa, mat.poisson_ratio);
    (e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu)))
}

/// One prescribed macroscopic strain: component `case_index` (1..=6, Voigt order).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoadCase {
    pub case_index: usize,
    pub strain_magnitude: f64,
}

impl LoadCase {
    pub fn new(case_index: usize, strain_magnitude: f64) -> Result<Self> {
        if !(1..=6).contains(&case_index) {
            return Err(Error::InvalidArgument(format!("load case must be 1..=6, got {case_index}")));
        }
        if !(strain_magnitude > 0.0 && strain_magnitude.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "strain magnitude must be positive, got {strain_magnitude}"
            )));
        }
        Ok(Self {
            case_index,
            strain_magnitude,
        })
    }

    pub fn all(strain_magnitude: f64) -> Result<Vec<LoadCase>> {
        (1..=6).map(|c| LoadCase::new(c, strain_magnitude)).collect()
    }

    /// Macroscopic Voigt strain with engineering shear.
    pub fn strain(&self) -> [f64; 6] {
        let mut e = [0.0; 6];
        e[self.case_index - 1] = self.strain_magnitude;
        e
    }

    fn face_constraints(&self) -> [FaceConstraint; 3] {
        let fc = |comp, axis| FaceConstraint { comp, axis };
        match self.case_index {
            1..=3 => [fc(0, 0), fc(1, 1), fc(2, 2)],
            4 => [fc(1, 2), fc(2, 1), fc(0, 0)],
            5 => [fc(2, 0), fc(0, 2), fc(1, 1)],
            _ => [fc(0, 1), fc(1, 0), fc(2, 2)],
        }
    }
}

/// Which boundary conditions produced a result.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryConditions {
    /// Uniform prescribed displacements on the cell faces.
    #[default]
    Kinematic,
}

impl std::fmt::Display for BoundaryConditions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryConditions::Kinematic => f.write_str("kinematic"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreconditionerKind {
    /// Geometric multigrid, falling back to Jacobi for grids that do not coarsen.
    #[default]
    Multigrid,
    Jacobi,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Defaults to `10 n^3`.
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub preconditioner: PreconditionerKind,
}

fn default_tol() -> f64 {
    DEFAULT_TOLERANCE
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOLERANCE,
            max_iters: None,
            preconditioner: PreconditionerKind::Multigrid,
        }
    }
}

/// Prescribed displacement components of one load case.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryConstraints {
    /// Global DOF index `3 * node + component`, nodes x fastest on the `(n+1)^3` lattice.
    pub dofs: Vec<usize>,
    pub values: Vec<f64>,
}

/// Nodal displacements of one solved load case.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    pub case: LoadCase,
    pub resolution: usize,
    pub cell_size_mm: f64,
    /// Three components per node, nodes x fastest on the `(n+1)^3` lattice.
    pub values: Vec<f64>,
    pub converged_residual: f64,
    pub iterations: usize,
}

impl DisplacementField {
    pub fn at(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let m = self.resolution + 1;
        let node = i + m * (j + m * k);
        [self.values[3 * node], self.values[3 * node + 1], self.values[3 * node + 2]]
    }

    pub fn node_position(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let h = self.cell_size_mm / self.resolution as f64;
        [i as f64 * h, j as f64 * h, k as f64 * h]
    }
}

/// Effective stiffness in GPa, Voigt order with engineering shear strains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StiffnessMatrix {
    pub c: [[f64; 6]; 6],
    /// `max |c_ij - c_ji| / c_11` before symmetrisation.
    pub asymmetry: f64,
}

impl StiffnessMatrix {
    /// Records the asymmetry of `raw` and keeps its symmetric part.
    pub fn from_raw(raw: [[f64; 6]; 6]) -> Self {
        let c11 = raw[0][0];
        let mut asym: f64 = 0.0;
        let mut c = raw;
        for i in 0..6 {
            for j in 0..6 {
                asym = asym.max((raw[i][j] - raw[j][i]).abs());
                c[i][j] = 0.5 * (raw[i][j] + raw[j][i]);
            }
        }
        Self {
            c,
            asymmetry: if c11 != 0.0 { asym / c11.abs() } else { asym },
        }
    }

    pub fn isotropic(mat: &MaterialSpec) -> Self {
        let (lambda, mu) = lame_parameters(mat);
        let d = constitutive(lambda, mu);
        Self {
            c: std::array::from_fn(|i| std::array::from_fn(|j| d[(i, j)])),
            asymmetry: 0.0,
        }
    }

    pub fn matrix(&self) -> Mat6 {
        Mat6::from_fn(|i, j| self.c[i][j])
    }

    pub fn eigenvalues(&self) -> [f64; 6] {
        let e = self.matrix().symmetric_eigen().eigenvalues;
        let mut v: [f64; 6] = std::array::from_fn(|i| e[i]);
        v.sort_by(f64::total_cmp);
        v
    }

    /// Text block: `# key value` comment lines, then six rows with 9 significant digits.
    pub fn to_text(&self, metadata: &BTreeMap<String, String>) -> String {
        let mut out = String::new();
        for (k, v) in metadata {
            writeln!(out, "# {k} {v}").unwrap();
        }
        for row in &self.c {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.8e}")).collect();
            writeln!(out, "{}", cells.join(" ")).unwrap();
        }
        out
    }

    pub fn from_text(text: &str, origin: &Path) -> Result<(StiffnessMatrix, BTreeMap<String, String>)> {
        let mut metadata = BTreeMap::new();
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some((k, v)) = comment.split_once(char::is_whitespace) {
                    metadata.insert(k.to_string(), v.trim().to_string());
                }
                continue;
            }
            let row: Vec<f64> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|w| !w.is_empty())
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(origin, format!("line {}: {e}", lineno + 1)))?;
            if row.len() != 6 {
                return Err(Error::parse(origin, format!("line {}: expected 6 values", lineno + 1)));
            }
            rows.push(row);
        }
        if rows.len() != 6 {
            return Err(Error::parse(origin, format!("expected 6 rows, found {}", rows.len())));
        }
        let raw: [[f64; 6]; 6] = std::array::from_fn(|i| std::array::from_fn(|j| rows[i][j]));
        let mut sm = StiffnessMatrix::from_raw(raw);
        if let Some(a) = metadata.get("asymmetry").and_then(|a| a.parse().ok()) {
            sm.asymmetry = a;
        }
        Ok((sm, metadata))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HomogenizeOptions {
    pub material: MaterialSpec,
    pub strain_magnitude: f64,
    pub solver: SolverOptions,
}

impl Default for HomogenizeOptions {
    fn default() -> Self {
        Self {
            material: MaterialSpec::default(),
            strain_magnitude: DEFAULT_STRAIN,
            solver: SolverOptions::default(),
        }
    }
}

/// Stiffness plus solver bookkeeping of one homogenization run.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogenizationReport {
    pub stiffness: StiffnessMatrix,
    pub resolution: usize,
    pub tol: f64,
    pub iterations: [usize; 6],
    pub residuals: [f64; 6],
    pub boundary_conditions: BoundaryConditions,
    pub preconditioner: PreconditionerKind,
}

impl HomogenizationReport {
    pub fn metadata(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("resolution".into(), self.resolution.to_string());
        m.insert("tol".into(), format!("{:e}", self.tol));
        m.insert(
            "iterations".into(),
            self.iterations.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","),
        );
        m.insert("asymmetry".into(), format!("{:.6e}", self.stiffness.asymmetry));
        m.insert("bc_family".into(), self.boundary_conditions.to_string());
        m.insert(
            "preconditioner".into(),
            format!("{:?}", self.preconditioner).to_lowercase(),
        );
        m
    }
}

/// Discretised cell, reusable across load cases.
pub struct CellProblem<'g> {
    grid: &'g VoxelGrid,
    material: MaterialSpec,
    lambda: f64,
    mu: f64,
    hierarchy: Hierarchy,
    preconditioner: PreconditionerKind,
}

impl<'g> CellProblem<'g> {
    pub fn new(grid: &'g VoxelGrid, material: &MaterialSpec, preconditioner: PreconditionerKind) -> Result<Self> {
        material.validate()?;
        if grid.is_void() {
            return Err(Error::NoSolid);
        }
        let (lambda, mu) = lame_parameters(material);
        let h = grid.pitch();
        let base = to_flat(&hex_element_stiffness(lambda, mu, h));
        let scales = grid
            .occupancy
            .iter()
            .map(|&s| if s { 1.0 } else { material.void_contrast })
            .collect();
        let fine = GridOperator::uniform_phases(grid.resolution, base, scales);
        let (hierarchy, used) = match preconditioner {
            PreconditionerKind::Jacobi => (Hierarchy::single(fine), PreconditionerKind::Jacobi),
            PreconditionerKind::Multigrid => {
                let n = fine.n;
                match Hierarchy::build(fine) {
                    Ok(h) => (h, PreconditionerKind::Multigrid),
                    Err(fine) => {
                        log::info!("resolution {n} does not coarsen to a small grid; using Jacobi");
                        (Hierarchy::single(fine), PreconditionerKind::Jacobi)
                    }
                }
            }
        };
        Ok(Self {
            grid,
            material: *material,
            lambda,
            mu,
            hierarchy,
            preconditioner: used,
        })
    }

    pub fn preconditioner(&self) -> PreconditionerKind {
        self.preconditioner
    }

    /// Multigrid depth (1 for plain Jacobi).
    pub fn levels(&self) -> usize {
        self.hierarchy.depth()
    }

    /// Solves one load case; see [`CellProblem::solve_cases`].
    pub fn solve(&self, case: LoadCase, tol: f64, max_iters: usize) -> Result<DisplacementField> {
        Ok(self.solve_cases(&[case], tol, max_iters)?.remove(0))
    }

    /// Solves each case at unit strain and scales the field, so results are
    /// exactly linear in the strain magnitude.
    pub fn solve_cases(&self, cases: &[LoadCase], tol: f64, max_iters: usize) -> Result<Vec<DisplacementField>> {
        let mut out = Vec::with_capacity(cases.len());
        let mut cached: Option<([FaceConstraint; 3], multigrid::VCycle<'_>)> = None;
        for case in cases {
            let constraints = case.face_constraints();
            let fine = self.hierarchy.fine();
            let mask = constraint_mask(fine.nodes_per_side(), &constraints);
            let unit = LoadCase {
                case_index: case.case_index,
                strain_magnitude: 1.0,
            };
            let mut u = affine_field(self.grid.resolution, self.grid.pitch(), &unit.strain());
            let outcome = if self.preconditioner == PreconditionerKind::Multigrid {
                if cached.as_ref().map(|c| c.0) != Some(constraints) {
                    cached = Some((constraints, self.hierarchy.v_cycle(&constraints)));
                }
                let vc = &mut cached.as_mut().unwrap().1;
                pcg(fine, &mask, &mut u, vc, tol, max_iters)
            } else {
                let mut jac = Jacobi {
                    inv_diag: masked_inverse(self.hierarchy.fine_diagonal(), &mask),
                };
                pcg(fine, &mask, &mut u, &mut jac as &mut dyn Preconditioner, tol, max_iters)
            };
            if !outcome.converged {
                return Err(Error::NotConverged {
                    residual: outcome.relative_residual,
                    iterations: outcome.iterations,
                });
            }
            log::debug!(
                "case {} converged in {} iterations (residual {:.2e})",
                case.case_index,
                outcome.iterations,
                outcome.relative_residual
            );
            let m = case.strain_magnitude;
            u.par_iter_mut().for_each(|x| *x *= m);
            out.push(DisplacementField {
                case: *case,
                resolution: self.grid.resolution,
                cell_size_mm: self.grid.cell_size_mm,
                values: u,
                converged_residual: outcome.relative_residual,
                iterations: outcome.iterations,
            });
        }
        Ok(out)
    }

    /// Volume average of the element-averaged stresses, ersatz voxels included.
    pub fn average_stress(&self, field: &DisplacementField) -> [f64; 6] {
        average_stress_impl(self.grid, self.lambda, self.mu, self.material.void_contrast, &field.values)
    }
}

fn affine_field(n: usize, h: f64, strain: &[f64; 6]) -> Vec<f64> {
    let e = element::macro_tensor(strain);
    let m = n + 1;
    let mut u = vec![0.0; 3 * m * m * m];
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                let x = [i as f64 * h, j as f64 * h, k as f64 * h];
                let node = i + m * (j + m * k);
                for c in 0..3 {
                    u[3 * node + c] = e[c][0] * x[0] + e[c][1] * x[1] + e[c][2] * x[2];
                }
            }
        }
    }
    u
}

fn average_stress_impl(grid: &VoxelGrid, lambda: f64, mu: f64, contrast: f64, u: &[f64]) -> [f64; 6] {
    let n = grid.resolution;
    let m = n + 1;
    let g = element::stress_operator(lambda, mu, grid.pitch());
    let slabs: Vec<[f64; 6]> = (0..n)
        .into_par_iter()
        .map(|ez| {
            let mut acc = [0.0; 6];
            for ey in 0..n {
                for ex in 0..n {
                    let s = if grid.is_solid(ex, ey, ez) { 1.0 } else { contrast };
                    let mut ue = [0.0; 24];
                    for b in 0..8 {
                        let o = element::node_offset(b);
                        let node = (ex + o[0]) + m * ((ey + o[1]) + m * (ez + o[2]));
                        ue[3 * b..3 * b + 3].copy_from_slice(&u[3 * node..3 * node + 3]);
                    }
                    for (r, a) in acc.iter_mut().enumerate() {
                        let mut v = 0.0;
                        for q in 0..24 {
                            v += g[(r, q)] * ue[q];
                        }
                        *a += s * v;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = [0.0; 6];
    for slab in &slabs {
        for r in 0..6 {
            total[r] += slab[r];
        }
    }
    let count = (n * n * n) as f64;
    total.map(|t| t / count)
}

/// Prescribed boundary displacement components of `case` on `grid`'s node lattice.
pub fn load_case_constraints(case: &LoadCase, grid: &VoxelGrid) -> BoundaryConstraints {
    let n = grid.resolution;
    let mask = constraint_mask(n + 1, &case.face_constraints());
    let u = affine_field(n, grid.pitch(), &case.strain());
    let dofs: Vec<usize> = mask.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect();
    let values = dofs.iter().map(|&d| u[d]).collect();
    BoundaryConstraints { dofs, values }
}

pub fn default_max_iters(resolution: usize) -> usize {
    10 * resolution.pow(3)
}

/// Solves one load case from scratch.
pub fn solve_case(
    grid: &VoxelGrid,
    mat: &MaterialSpec,
    case: LoadCase,
    tol: f64,
    max_iters: usize,
) -> Result<DisplacementField> {
    CellProblem::new(grid, mat, PreconditionerKind::default())?.solve(case, tol, max_iters)
}

pub fn average_stress(grid: &VoxelGrid, mat: &MaterialSpec, field: &DisplacementField) -> [f64; 6] {
    let (lambda, mu) = lame_parameters(mat);
    average_stress_impl(grid, lambda, mu, mat.void_contrast, &field.values)
}

/// Effective stiffness from the six load cases with default solver settings.
pub fn homogenize(grid: &VoxelGrid, mat: &MaterialSpec, strain_magnitude: f64, tol: f64) -> Result<StiffnessMatrix> {
    let opts = HomogenizeOptions {
        material: *mat,
        strain_magnitude,
        solver: SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    };
    Ok(homogenize_with(grid, &opts)?.stiffness)
}

pub fn homogenize_with(grid: &VoxelGrid, opts: &HomogenizeOptions) -> Result<HomogenizationReport> {
    let problem = CellProblem::new(grid, &opts.material, opts.solver.preconditioner)?;
    let max_iters = opts.solver.max_iters.unwrap_or_else(|| default_max_iters(grid.resolution));
    let cases = LoadCase::all(opts.strain_magnitude)?;
    let fields = problem.solve_cases(&cases, opts.solver.tol, max_iters)?;
    let mut raw = [[0.0; 6]; 6];
    for (j, field) in fields.iter().enumerate() {
        let sigma = problem.average_stress(field);
        for i in 0..6 {
            raw[i][j] = sigma[i] / opts.strain_magnitude;
        }
    }
    Ok(HomogenizationReport {
        stiffness: StiffnessMatrix::from_raw(raw),
        resolution: grid.resolution,
        tol: opts.solver.tol,
        iterations: std::array::from_fn(|i| fields[i].iterations),
        residuals: std::array::from_fn(|i| fields[i].converged_residual),
        boundary_conditions: BoundaryConditions::Kinematic,
        preconditioner: problem.preconditioner(),
    })
}

pub fn write_stiffness(path: impl AsRef<Path>, c: &StiffnessMatrix, metadata: &BTreeMap<String, String>) -> Result<()> {
    std::fs::write(path, c.to_text(metadata))?;
    Ok(())
}

pub fn read_stiffness(path: impl AsRef<Path>) -> Result<(StiffnessMatrix, BTreeMap<String, String>)> {
    let path = path.as_ref();
    StiffnessMatrix::from_text(&std::fs::read_to_string(path)?, path)
}
