//! Fits a power law E/Es = c * rho^n to a small diameter sweep of one design.

use nestlat::analysis::{fit_polynomial, fit_power_law};
use nestlat::geometry::design;
use nestlat::homogenize::HomogenizeOptions;
use nestlat::sweep::run_pipeline;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = design("XNFS:0:0")?;
    let opts = HomogenizeOptions::default();
    let (mut rho, mut e) = (Vec::new(), Vec::new());
    for d in [0.8, 1.0, 1.2, 1.4, 1.6] {
        let r = run_pipeline(&base.clone().with_uniform_diameter(d), 24, &opts)?;
        println!("d = {d:.1}  rho_bar = {:.4}  E/Es = {:.4e}", r.rho_bar, r.e_bar);
        rho.push(r.rho_bar);
        e.push(r.e_bar);
    }
    let power = fit_power_law(&rho, &e)?;
    println!(
        "power law: c = {:.4}, n = {:.3}, R^2 = {:.5}",
        power.coefficients[0], power.coefficients[1], power.r_squared
    );
    let quad = fit_polynomial(&rho, &e, 2)?;
    println!("quadratic: coefficients {:.4?}, R^2 = {:.5}", quad.coefficients, quad.r_squared);
    Ok(())
}
