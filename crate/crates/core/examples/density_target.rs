//! Finds the uniform diameter giving a target relative density.

use nestlat::geometry::{catalog, Family};
use nestlat::sweep::target_density;

fn main() -> nestlat::Result<()> {
    let target = 0.15;
    for spec in catalog(Family::Bi) {
        match target_density(&spec, target, 0.2, 2.0, 48, 0.002) {
            Ok(t) => println!(
                "{:<14} d = {:.4} mm  rho_bar = {:.4}  ({} evaluations)",
                spec.name, t.diameter_mm, t.rho_bar, t.evaluations
            ),
            Err(e) => println!("{:<14} {e}", spec.name),
        }
    }
    Ok(())
}
