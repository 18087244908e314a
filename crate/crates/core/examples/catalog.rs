//! Lists the catalog and the strut count of each folded unit cell.

use nestlat::geometry::{build_unit_cell, catalog, Family};

fn main() -> nestlat::Result<()> {
    for family in [Family::Mono, Family::Bi, Family::Tri] {
        println!("{family:?}");
        for spec in catalog(family) {
            let model = build_unit_cell(&spec)?;
            let thetas: Vec<String> = spec.orders.iter().map(|o| format!("{}", o.orientation_deg)).collect();
            println!(
                "  {:<14} theta = [{}]  struts = {}",
                spec.name,
                thetas.join(", "),
                model.segments.len()
            );
        }
    }
    Ok(())
}
