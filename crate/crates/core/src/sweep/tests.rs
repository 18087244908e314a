use super::*;
use crate::geometry::{design, Segment, Vec3};

fn axis(path: &str, values: &[f64]) -> SweepAxis {
    SweepAxis {
        path: path.parse().unwrap(),
        values: values.to_vec(),
    }
}

/// Through-cylinder along x. The axis is moved off the voxel lattice's
/// symmetry lines so the voxel count grows one column at a time.
fn cylinder(d: f64) -> Result<StrutModel> {
    let (h, y, z) = (8.75 / 2.0, 0.0123, 0.0311);
    Ok(StrutModel::new(8.75, vec![Segment::new(Vec3::new(-h, y, z), Vec3::new(h, y, z), d / 2.0)]))
}

#[test]
fn parameter_paths_round_trip() {
    for s in ["d", "d0", "d12", "theta1", "alpha0", "resolution", "ratio:d0/d1"] {
        assert_eq!(s.parse::<ParamPath>().unwrap().to_string(), s);
    }
    assert_eq!("n".parse::<ParamPath>().unwrap(), ParamPath::Resolution);
    for bad in ["", "x1", "ratio:d0", "ratio:d0/x", "theta", "dd"] {
        assert!(bad.parse::<ParamPath>().is_err(), "{bad}");
    }
}

#[test]
fn grid_points_are_cartesian_last_axis_fastest() {
    let plan = SweepPlan::new(
        design("XNFS:0-1:0-0").unwrap(),
        vec![axis("d0", &[0.5, 0.6, 0.7, 0.8, 0.9]), axis("d1", &[1.0, 2.0, 3.0, 4.0, 5.0])],
    );
    plan.validate().unwrap();
    let pts = plan.points();
    assert_eq!(pts.len(), 25);
    assert_eq!(plan.len(), 25);
    assert_eq!(pts[0], vec![0.5, 1.0]);
    assert_eq!(pts[1], vec![0.5, 2.0]);
    assert_eq!(pts[5], vec![0.6, 1.0]);
}

#[test]
fn ratio_axes_fix_realised_diameters() {
    let mut plan = SweepPlan::new(
        design("XNFS:0-1:0-0").unwrap(),
        vec![axis("ratio:d0/d1", &[0.5, 0.75, 1.0, 1.25, 1.5]), axis("d1", &[0.6, 0.7, 0.8, 0.9, 1.0])],
    );
    plan.validate().unwrap();
    for p in plan.points() {
        let (spec, n) = apply_point(&plan, &p).unwrap();
        assert_eq!(n, DEFAULT_SWEEP_RESOLUTION);
        let d0 = spec.orders[0].diameter_mm;
        let d1 = spec.orders[1].diameter_mm;
        assert_eq!(d1, p[1]);
        assert!((d0 - p[0] * d1).abs() <= 1e-12 * d0);
    }
    // chained ratios resolve denominators first whatever the axis order
    let mut tri = design("XNFS:0-15-30").unwrap();
    tri = tri.with_uniform_diameter(1.0);
    plan = SweepPlan::new(tri, vec![axis("ratio:d0/d1", &[2.0]), axis("ratio:d1/d2", &[3.0]), axis("d2", &[0.1])]);
    let (spec, _) = apply_point(&plan, &[2.0, 3.0, 0.1]).unwrap();
    let d: Vec<f64> = spec.orders.iter().map(|o| o.diameter_mm).collect();
    assert!((d[2] - 0.1).abs() < 1e-15 && (d[1] - 0.3).abs() < 1e-12 && (d[0] - 0.6).abs() < 1e-12);
}

#[test]
fn invalid_plans_are_rejected() {
    let base = design("XNFS:0-15-30").unwrap();
    let bad = [
        vec![],
        vec![axis("d5", &[1.0])],
        vec![axis("alpha4", &[1.0])],
        vec![axis("d0", &[])],
        vec![axis("d0", &[1.0]), axis("d0", &[2.0])],
        vec![axis("ratio:d0/d0", &[1.0])],
        vec![axis("ratio:d0/d1", &[1.0]), axis("ratio:d1/d0", &[1.0])],
        vec![axis("ratio:d0/d1", &[1.0]), axis("ratio:d0/d2", &[1.0])],
        vec![axis("ratio:d0/d1", &[1.0]), axis("d0", &[1.0])],
        vec![axis("resolution", &[12.5])],
    ];
    for axes in bad {
        let plan = SweepPlan::new(base.clone(), axes.clone());
        assert!(matches!(plan.validate(), Err(Error::InvalidPlan(_))), "{axes:?}");
    }
}

#[test]
fn plan_toml_round_trip() {
    let text = r#"
design = "XNFS:0-1:0-30"
resolution = 24

[options.material]
youngs_modulus_gpa = 110.0
poisson_ratio = 0.3

[[axes]]
path = "d"
values = [0.6, 0.8]

[[axes]]
path = "alpha0"
values = [1.5, 1.81]
"#;
    let plan = SweepPlan::from_toml_str(text).unwrap();
    assert_eq!(plan.resolution, 24);
    assert_eq!(plan.options.material.youngs_modulus_gpa, 110.0);
    assert_eq!(plan.options.strain_magnitude, crate::homogenize::DEFAULT_STRAIN);
    assert_eq!(plan.base_spec.name, "XNFS:0-1:0-30");
    let again = SweepPlan::from_toml_str(&plan.to_toml_string().unwrap()).unwrap();
    assert_eq!(again, plan);
    assert!(SweepPlan::from_toml_str("resolution = 4\n[[axes]]\npath = \"d\"\nvalues = [1.0]\n").is_err());
    assert!(SweepPlan::from_toml_str("design = \"XNFS:0:0\"\nbogus = 1\n").is_err());
}

#[test]
fn infeasible_points_are_isolated() {
    let mut plan = SweepPlan::new(design("XNFS:0-1:0-0").unwrap(), vec![axis("alpha0", &[1.81, 7.0])]);
    plan.resolution = 16;
    let result = run_sweep(&plan, Some(1)).unwrap();
    assert_eq!(result.rows.len(), 1, "{:?}", result.failures);
    assert_eq!(result.rows[0].values, vec![1.81]);
    assert_eq!(result.failures.len(), 1);
    assert_eq!(result.failures[0].stage, Stage::Geometry);
    assert!(result.failures[0].message.contains("non-positive side length"));
}

#[test]
fn empty_design_fails_while_homogenizing() {
    let mut spec = design("XNFS:0:0").unwrap();
    spec.orders.clear();
    let err = run_pipeline(&spec, 8, &HomogenizeOptions::default()).unwrap_err();
    assert_eq!(err.stage, Stage::Homogenize);
    assert!(matches!(err.source, Error::NoSolid));
}

#[test]
fn solid_cell_reports_isotropy() {
    let model = StrutModel::new(8.75, vec![Segment::new(Vec3::zeros(), Vec3::zeros(), 10.0)]);
    let r = run_model_pipeline(&model, 8, &HomogenizeOptions::default()).unwrap();
    assert_eq!(r.rho_bar, 1.0);
    assert!((r.zener - 1.0).abs() < 1e-6 && (r.e_bar - 1.0).abs() < 1e-6);
    assert_eq!(r.class, crate::analysis::AnisotropyClass::PerfectlyIsotropic);
}

#[test]
fn diameter_sweep_is_monotone_and_reproducible() {
    let mut plan = SweepPlan::new(design("XNFS:0:0").unwrap(), vec![axis("d", &[0.6, 0.8, 1.0, 1.2, 1.4])]);
    plan.resolution = 16;
    let a = run_sweep(&plan, Some(1)).unwrap();
    let b = run_sweep(&plan, Some(2)).unwrap();
    assert!(a.failures.is_empty());
    assert_eq!(a.rows.len(), 5);
    // coarse voxels make density a staircase in d
    for w in a.rows.windows(2) {
        assert!(w[1].report.rho_bar >= w[0].report.rho_bar);
    }
    assert!(a.rows[4].report.rho_bar > a.rows[0].report.rho_bar);
    let csv = |r: &SweepResult| {
        let mut buf = Vec::new();
        r.write_csv(&mut buf, &["header".into()]).unwrap();
        String::from_utf8(buf).unwrap()
    };
    let text = csv(&a);
    assert_eq!(text, csv(&b));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# header"));
    assert_eq!(
        lines.next(),
        Some("d,name,n,rho_bar,s_bar,c11,c12,c44,e_gpa,e_bar,zener,class,bc_family,s_bar_cell")
    );
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn density_increases_strictly_along_a_diameter_axis() {
    let mut plan = SweepPlan::new(design("XNFS:0:0").unwrap(), vec![axis("d", &[0.6, 0.7, 0.8, 0.9, 1.0])]);
    plan.resolution = 64;
    let rho: Vec<f64> = plan
        .points()
        .iter()
        .map(|p| {
            let (spec, n) = apply_point(&plan, p).unwrap();
            relative_density(&voxelize(&build_unit_cell(&spec).unwrap(), n).unwrap())
        })
        .collect();
    for w in rho.windows(2) {
        assert!(w[1] > w[0], "{rho:?}");
    }
}

#[test]
fn cylinder_density_inverts_analytically() {
    let target = std::f64::consts::PI * 0.8 * 0.8 / (4.0 * 8.75 * 8.75);
    let t = target_density_with(cylinder, target, 0.2, 2.0, 128, 1e-4).unwrap();
    assert!((t.diameter_mm - 0.8).abs() <= 0.01, "{t:?}");
    assert!((t.rho_bar - target).abs() <= 1e-4);
}

#[test]
fn unreachable_density_is_unbracketed() {
    let spec = design("XNFS:0:0").unwrap();
    assert!(matches!(
        target_density(&spec, 0.0, 0.2, 1.0, 32, DEFAULT_DENSITY_TOL),
        Err(Error::Unbracketed { .. })
    ));
    assert!(matches!(
        target_density(&spec, 0.9, 0.2, 1.0, 32, DEFAULT_DENSITY_TOL),
        Err(Error::Unbracketed { .. })
    ));
    assert!(target_density(&spec, 0.1, 1.0, 0.5, 32, DEFAULT_DENSITY_TOL).is_err());
}

#[test]
fn density_target_is_verified_by_revoxelizing() {
    let spec = design("XNFS:0-1:0-30").unwrap();
    let t = target_density(&spec, 0.1, 0.2, 2.0, 64, DEFAULT_DENSITY_TOL).unwrap();
    let model = build_unit_cell(&spec.clone().with_uniform_diameter(t.diameter_mm)).unwrap();
    let rho = relative_density(&voxelize(&model, 64).unwrap());
    assert_eq!(rho, t.rho_bar);
    assert!((rho - 0.1).abs() <= DEFAULT_DENSITY_TOL);
}
