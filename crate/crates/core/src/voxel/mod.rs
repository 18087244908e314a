//! Voxel occupancy grids, density metrics and surface meshes of unit cells.

mod mesh;
mod sdf;

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{StrutModel, Vec3};

pub use mesh::{
    marching_cubes, mesh_field, read_stl, surface_mesh, surface_mesh_capped, write_obj, write_obj_to, write_stl, write_stl_labelled,
    write_stl_to, TriMesh,
};
pub use sdf::{box_distance, sdf, CellSolid, Lattice, SignedDistance, Sphere, StrutUnion};

pub const DEFAULT_RESOLUTION: usize = 64;

/// Minimum number of voxels a strut diameter should span.
pub const MIN_VOXELS_PER_DIAMETER: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinFeatureWarning {
    pub diameter_mm: f64,
    pub voxels_per_diameter: f64,
}

impl std::fmt::Display for MinFeatureWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "strut diameter {} mm spans only {:.2} voxels (< {})",
            self.diameter_mm, self.voxels_per_diameter, MIN_VOXELS_PER_DIAMETER
        )
    }
}

/// Solid/void occupancy of an `n^3` grid, sampled at voxel centres, x fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    pub resolution: usize,
    pub cell_size_mm: f64,
    pub occupancy: Vec<bool>,
    pub min_feature_warning: Option<MinFeatureWarning>,
}

impl VoxelGrid {
    pub fn filled(resolution: usize, cell_size_mm: f64, solid: bool) -> Self {
        Self {
            resolution,
            cell_size_mm,
            occupancy: vec![solid; resolution.pow(3)],
            min_feature_warning: None,
        }
    }

    /// Grid whose voxel `(i, j, k)` is solid when `f(i, j, k)` holds.
    pub fn from_fn(resolution: usize, cell_size_mm: f64, f: impl Fn(usize, usize, usize) -> bool) -> Self {
        let n = resolution;
        let mut occupancy = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    occupancy.push(f(i, j, k));
                }
            }
        }
        Self {
            resolution,
            cell_size_mm,
            occupancy,
            min_feature_warning: None,
        }
    }

    pub fn pitch(&self) -> f64 {
        self.cell_size_mm / self.resolution as f64
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.resolution * (j + self.resolution * k)
    }

    pub fn is_solid(&self, i: usize, j: usize, k: usize) -> bool {
        self.occupancy[self.index(i, j, k)]
    }

    /// Lattice of voxel centres.
    pub fn center_lattice(&self) -> Lattice {
        center_lattice(self.resolution, self.cell_size_mm)
    }

    pub fn center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.center_lattice().point(i, j, k)
    }

    pub fn solid_count(&self) -> usize {
        self.occupancy.iter().filter(|&&s| s).count()
    }

    pub fn is_void(&self) -> bool {
        !self.occupancy.iter().any(|&s| s)
    }

    /// Same grid with axes relabelled: new `(i, j, k)` reads old `(perm applied)`.
    pub fn permuted_axes(&self, perm: [usize; 3]) -> VoxelGrid {
        let n = self.resolution;
        VoxelGrid::from_fn(n, self.cell_size_mm, |i, j, k| {
            let idx = [i, j, k];
            self.is_solid(idx[perm[0]], idx[perm[1]], idx[perm[2]])
        })
    }

    /// Binary dump: `u64` n, `f64` cell size (both little endian), then `n^3` bytes.
    pub fn write_dump(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&(self.resolution as u64).to_le_bytes())?;
        w.write_all(&self.cell_size_mm.to_le_bytes())?;
        let body: Vec<u8> = self.occupancy.iter().map(|&s| s as u8).collect();
        w.write_all(&body)?;
        Ok(())
    }

    pub fn read_dump(mut r: impl Read, origin: &Path) -> Result<VoxelGrid> {
        let mut head = [0u8; 16];
        r.read_exact(&mut head)?;
        let n = u64::from_le_bytes(head[..8].try_into().unwrap()) as usize;
        let cell = f64::from_le_bytes(head[8..].try_into().unwrap());
        if n < 2 || n > 4096 || !(cell > 0.0) {
            return Err(Error::parse(origin, format!("bad grid header (n={n}, L={cell})")));
        }
        let mut body = vec![0u8; n * n * n];
        r.read_exact(&mut body)
            .map_err(|e| Error::parse(origin, format!("truncated grid body: {e}")))?;
        Ok(VoxelGrid {
            resolution: n,
            cell_size_mm: cell,
            occupancy: body.into_iter().map(|b| b != 0).collect(),
            min_feature_warning: None,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_dump(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<VoxelGrid> {
        let path = path.as_ref();
        let f = std::fs::File::open(path)?;
        VoxelGrid::read_dump(std::io::BufReader::new(f), path)
    }
}

pub fn center_lattice(resolution: usize, cell_size_mm: f64) -> Lattice {
    let h = cell_size_mm / resolution as f64;
    Lattice {
        origin: Vec3::repeat(-0.5 * cell_size_mm + 0.5 * h),
        pitch: h,
        points: resolution,
    }
}

fn check_resolution(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("resolution must be at least 2, got {n}")));
    }
    Ok(())
}

/// Voxel grid of any solid; a voxel is solid when the field is negative at its centre.
pub fn voxelize_field(field: &impl SignedDistance, cell_size_mm: f64, resolution: usize) -> Result<VoxelGrid> {
    check_resolution(resolution)?;
    let values = field.fill_lattice(&center_lattice(resolution, cell_size_mm));
    Ok(VoxelGrid {
        resolution,
        cell_size_mm,
        occupancy: values.into_iter().map(|v| v < 0.0).collect(),
        min_feature_warning: None,
    })
}

/// Occupancy of the strut solid; warns when struts are thin relative to the pitch.
pub fn voxelize(model: &StrutModel, resolution: usize) -> Result<VoxelGrid> {
    let mut grid = voxelize_field(&CellSolid::new(model), model.cell_size_mm, resolution)?;
    if let Some(d) = model.min_diameter() {
        let span = d / grid.pitch();
        if span < MIN_VOXELS_PER_DIAMETER {
            let warning = MinFeatureWarning {
                diameter_mm: d,
                voxels_per_diameter: span,
            };
            log::warn!("{warning}");
            grid.min_feature_warning = Some(warning);
        }
    }
    Ok(grid)
}

/// Solid volume fraction of the grid.
pub fn relative_density(grid: &VoxelGrid) -> f64 {
    grid.solid_count() as f64 / grid.occupancy.len() as f64
}

/// Density and surface metrics of one model at one resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceMetrics {
    pub rho_bar: f64,
    pub area_mm2: f64,
    /// Lattice surface area per solid volume, mm^-1.
    pub s_bar: f64,
    /// Lattice surface area per cell volume, mm^-1.
    pub s_bar_cell: f64,
}

/// Surface area over solid volume. Struts cut by the cell faces leave those
/// cut disks out of the area.
pub fn surface_area_density(model: &StrutModel, resolution: usize) -> Result<f64> {
    Ok(surface_metrics(model, resolution)?.s_bar)
}

pub fn surface_metrics(model: &StrutModel, resolution: usize) -> Result<SurfaceMetrics> {
    let grid = voxelize(model, resolution)?;
    surface_metrics_with_grid(model, &grid)
}

pub fn surface_metrics_with_grid(model: &StrutModel, grid: &VoxelGrid) -> Result<SurfaceMetrics> {
    let rho_bar = relative_density(grid);
    if rho_bar == 0.0 {
        return Err(Error::EmptyModel);
    }
    // a cell filled completely has no lattice surface inside it
    let area = match surface_mesh(model, grid.resolution) {
        Ok(mesh) => mesh.area(),
        Err(Error::EmptyModel) => 0.0,
        Err(e) => return Err(e),
    };
    let cell_volume = model.cell_size_mm.powi(3);
    Ok(SurfaceMetrics {
        rho_bar,
        area_mm2: area,
        s_bar: area / (rho_bar * cell_volume),
        s_bar_cell: area / cell_volume,
    })
}
