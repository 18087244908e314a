//! Sweeps the shared strut diameter of a bi-order design and prints the CSV.

use nestlat::geometry::design;
use nestlat::sweep::{run_sweep, ParamPath, SweepAxis, SweepPlan};

fn main() -> nestlat::Result<()> {
    let mut plan = SweepPlan::new(
        design("XNFS:0-1:0-45")?,
        vec![SweepAxis {
            path: ParamPath::Diameter,
            values: vec![0.6, 0.8, 1.0, 1.2],
        }],
    );
    plan.resolution = 24;
    let result = run_sweep(&plan, None)?;
    result.write_csv(std::io::stdout().lock(), &[])?;
    for f in &result.failures {
        eprintln!("{:?} failed at {}: {}", f.values, f.stage, f.message);
    }
    Ok(())
}
