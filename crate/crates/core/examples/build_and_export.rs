//! Builds one design, saves the strut model and writes a closed STL surface.
//!
//! `cargo run --release --example build_and_export -- XNFS:0-1:0-30 out_dir`

use std::path::PathBuf;

use nestlat::geometry::{build_unit_cell, design, write_model};
use nestlat::voxel::{surface_mesh_capped, surface_metrics, write_stl};

fn main() -> nestlat::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "XNFS:0-1:0-30".into());
    let dir = PathBuf::from(args.next().unwrap_or_else(|| std::env::temp_dir().display().to_string()));

    let model = build_unit_cell(&design(&name)?)?;
    let stem = name.replace(':', "_");
    let struts = dir.join(format!("{stem}.struts"));
    write_model(&model, &struts)?;

    let mesh = surface_mesh_capped(&model, 64)?;
    let stl = dir.join(format!("{stem}.stl"));
    write_stl(&mesh, &stl)?;

    let m = surface_metrics(&model, 64)?;
    println!("{name}: {} struts, rho_bar {:.4}, S_bar {:.3} /mm", model.segments.len(), m.rho_bar, m.s_bar);
    println!("watertight: {}", mesh.check_watertight());
    println!("wrote {} and {}", struts.display(), stl.display());
    Ok(())
}
