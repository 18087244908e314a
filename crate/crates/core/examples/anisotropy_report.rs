//! Runs one design through the full pipeline and writes its Young's modulus
//! surface as OBJ.
//!
//! `cargo run --release --example anisotropy_report -- XNFS:1:45 32`

use nestlat::analysis::ymsurface_mesh;
use nestlat::geometry::design;
use nestlat::homogenize::HomogenizeOptions;
use nestlat::sweep::run_pipeline;
use nestlat::voxel::write_obj;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "XNFS:1:45".into());
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(32);

    let opts = HomogenizeOptions::default();
    let r = run_pipeline(&design(&name)?, n, &opts)?;
    println!("{name} at n = {n}");
    println!("  rho_bar   {:.4}", r.rho_bar);
    println!("  C11/C12/C44  {:.3} / {:.3} / {:.3} GPa", r.cubic.c11, r.cubic.c12, r.cubic.c44);
    println!("  E {:.3} GPa, E/Es {:.4e}", r.e_gpa, r.e_bar);
    println!("  Zener {:.4} -> {}", r.zener, r.class);

    let mesh = ymsurface_mesh(&r.cubic, opts.material.youngs_modulus_gpa, 4)?;
    let path = std::env::temp_dir().join(format!("{}_ymsurf.obj", name.replace(':', "_")));
    write_obj(&mesh, &path)?;
    println!("  surface written to {}", path.display());
    Ok(())
}
