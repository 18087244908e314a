//! Homogenizes a fully solid cell; the result is the isotropic bulk stiffness.

use nestlat::analysis::{cubic_project, modulus_axis, zener};
use nestlat::homogenize::{homogenize_with, HomogenizeOptions};
use nestlat::voxel::VoxelGrid;

fn main() -> nestlat::Result<()> {
    let grid = VoxelGrid::filled(16, 8.75, true);
    let report = homogenize_with(&grid, &HomogenizeOptions::default())?;
    for row in report.stiffness.c {
        println!("{}", row.map(|v| format!("{v:9.3}")).join(" "));
    }
    let cc = cubic_project(&report.stiffness)?;
    println!("E = {:.2} GPa, Z = {:.4}", modulus_axis(&cc)?, zener(&cc)?);
    Ok(())
}
