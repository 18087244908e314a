//! The `nestlat` command line.
//!
//! Every file written carries a `# nestlat <version> config-sha256=<hex>`
//! header (binary STL: the 80-byte header) hashing the effective parameters
//! and the content of any input files. Output bodies are deterministic;
//! timestamps go to a `<output>.meta.json` sidecar.
//!
//! Exit codes:
//!
//! | code | errors |
//! |------|--------|
//! | 0 | success |
//! | 2 | bad arguments, specs, plans, configs or unparsable input files |
//! | 3 | a nesting order with non-positive side length |
//! | 4 | a model with no solid surface |
//! | 5 | solver: no solid voxels, no convergence |
//! | 6 | analysis: degenerate constants, failed fits, unreachable density targets |
//! | 7 | filesystem errors |

mod config;
mod provenance;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analysis::{
    cubic_project, fit_polynomial, fit_power_law, ymsurface_mesh, AnisotropyReport, FitResult,
};
use crate::geometry::{
    build_unit_cell, catalog, model_to_string, read_model, Family, NestedLatticeSpec, StrutModel,
    DEFAULT_CELL_SIZE_MM, DEFAULT_SPACING_MM,
};
use crate::homogenize::{
    homogenize_with, read_stiffness, HomogenizeOptions, MaterialSpec, PreconditionerKind, SolverOptions,
    StiffnessMatrix, DEFAULT_STRAIN, DEFAULT_TOLERANCE, DEFAULT_VOID_CONTRAST,
};
use crate::sweep::{read_plan, run_sweep, target_density, PipelineError, Stage, DEFAULT_DENSITY_TOL};
use crate::voxel::{
    surface_mesh_capped, surface_metrics_with_grid, voxelize, write_obj_to, write_stl_labelled, SurfaceMetrics,
    DEFAULT_RESOLUTION,
};
use crate::Error;

pub use config::{OutputToggles, RunConfig};
pub use provenance::{file_digest, sidecar_path, Provenance};

#[derive(Parser, Debug)]
#[command(name = "nestlat", version, about = "Nested X-cross lattice unit cells: build, voxelize, homogenize, analyze")]
pub struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn log_level(&self) -> log::LevelFilter {
        match self.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List catalog designs, optionally writing their spec files.
    Catalog {
        #[arg(value_enum)]
        family: FamilyArg,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Build the strut model of a design.
    Generate {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a closed STL of the cell.
        #[arg(long)]
        stl: Option<PathBuf>,
        /// Sampling resolution of the STL.
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
    },
    /// Relative density and surface-area density of a model.
    Metrics {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Effective stiffness of a model.
    Homogenize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cubic constants, moduli, Zener ratio and class from a stiffness file.
    Analyze {
        #[arg(long)]
        stiffness: PathBuf,
        /// Solid Young's modulus, GPa; defaults to the value recorded in the file.
        #[arg(long)]
        es: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate every point of a parameter grid.
    Sweep {
        #[arg(long)]
        plan: PathBuf,
        /// Points evaluated at once; defaults to one per core.
        #[arg(long)]
        workers: Option<usize>,
        /// Report CSV; failed points go to `<out>.failures.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Directional Young's modulus surface as an OBJ mesh.
    Ymsurf {
        #[arg(long)]
        stiffness: PathBuf,
        #[arg(long, default_value_t = 4)]
        subdiv: u32,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        es: Option<f64>,
    },
    /// Closed STL of a model.
    ExportStl {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate, homogenize and analyze one design from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Uniform strut diameter giving a target relative density.
    TargetDensity {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long)]
        target: f64,
        #[arg(long, default_value_t = 0.2)]
        d_min: f64,
        #[arg(long, default_value_t = 2.0)]
        d_max: f64,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
        #[arg(long, default_value_t = DEFAULT_DENSITY_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Power-law or polynomial fit of two CSV columns.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "x")]
        x: String,
        #[arg(long, default_value = "y")]
        y: String,
        #[arg(long, value_enum, default_value_t = FitKind::Power)]
        model: FitKind,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        /// Treat x as a nesting index i and fit against i * spacing / cell size.
        #[arg(long)]
        nesting_index: bool,
        #[arg(long, default_value_t = DEFAULT_SPACING_MM)]
        spacing: f64,
        #[arg(long, default_value_t = DEFAULT_CELL_SIZE_MM)]
        cell_size: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Mono,
    Bi,
    Tri,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FitKind {
    Power,
    Poly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PreconditionerArg {
    Multigrid,
    Jacobi,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["spec", "design"])))]
pub struct DesignArgs {
    /// Spec file (TOML).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Catalog name such as XNFS:0-1:0-30.
    #[arg(long)]
    pub design: Option<String>,
}

#[derive(Args, Debug)]
pub struct SolverArgs {
    /// Solid Young's modulus (GPa) and Poisson ratio.
    #[arg(long, value_parser = parse_material, default_value = "193,0.28")]
    pub material: (f64, f64),
    #[arg(long, default_value_t = DEFAULT_STRAIN)]
    pub strain: f64,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_VOID_CONTRAST)]
    pub void_contrast: f64,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, value_enum, default_value_t = PreconditionerArg::Multigrid)]
    pub preconditioner: PreconditionerArg,
}

impl SolverArgs {
    fn options(&self) -> HomogenizeOptions {
        HomogenizeOptions {
            material: MaterialSpec {
                youngs_modulus_gpa: self.material.0,
                poisson_ratio: self.material.1,
                void_contrast: self.void_contrast,
            },
            strain_magnitude: self.strain,
            solver: SolverOptions {
                tol: self.tol,
                max_iters: self.max_iters,
                preconditioner: match self.preconditioner {
                    PreconditionerArg::Multigrid => PreconditionerKind::Multigrid,
                    PreconditionerArg::Jacobi => PreconditionerKind::Jacobi,
                },
            },
        }
    }
}

fn parse_material(s: &str) -> std::result::Result<(f64, f64), String> {
    let (e, nu) = s.split_once(',').ok_or_else(|| format!("expected E,nu but got {s:?}"))?;
    let e: f64 = e.trim().parse().map_err(|err| format!("E: {err}"))?;
    let nu: f64 = nu.trim().parse().map_err(|err| format!("nu: {err}"))?;
    Ok((e, nu))
}

/// A library error, tagged with its pipeline stage when one applies.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Plain(#[from] Error),
    #[error(transparent)]
    Staged(#[from] PipelineError),
}

impl CliError {
    pub fn error(&self) -> &Error {
        match self {
            CliError::Plain(e) => e,
            CliError::Staged(p) => &p.source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(self.error())
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn at<T>(r: crate::Result<T>, stage: Stage) -> CliResult<T> {
    r.map_err(|source| CliError::Staged(PipelineError { stage, source }))
}

/// Process exit code of each error family.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::InvalidSpec(_) | Error::InvalidPlan(_) | Error::Parse { .. } => 2,
        Error::NonPositiveLength { .. } => 3,
        Error::EmptyModel => 4,
        Error::NoSolid | Error::NotConverged { .. } => 5,
        Error::DegenerateInput(_)
        | Error::SingularFit(_)
        | Error::NonPositiveData(_)
        | Error::Unbracketed { .. }
        | Error::DensityNotReached { .. } => 6,
        Error::Io(_) => 7,
    }
}

/// Runs a parsed command line, reporting any error on stderr; returns the exit code.
pub fn execute(cli: &Cli) -> i32 {
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> CliResult {
    let started = SystemTime::now();
    match &cli.command {
        Command::Catalog { family, out_dir } => cmd_catalog(*family, out_dir.as_deref(), started),
        Command::Generate {
            design,
            out,
            stl,
            resolution,
        } => cmd_generate(design, out.as_deref(), stl.as_deref(), *resolution, started),
        Command::Metrics { model, resolution, out } => cmd_metrics(model, *resolution, out.as_deref(), started),
        Command::Homogenize {
            model,
            resolution,
            solver,
            out,
        } => cmd_homogenize(model, *resolution, &solver.options(), out.as_deref(), started),
        Command::Analyze { stiffness, es, out } => cmd_analyze(stiffness, *es, out.as_deref(), started),
        Command::Sweep { plan, workers, out } => cmd_sweep(plan, *workers, out.as_deref(), started),
        Command::Ymsurf {
            stiffness,
            subdiv,
            out,
            es,
        } => cmd_ymsurf(stiffness, *subdiv, out, *es, started),
        Command::ExportStl { model, resolution, out } => cmd_export_stl(model, *resolution, out, started),
        Command::Run { config } => cmd_run(config, started),
        Command::TargetDensity {
            design,
            target,
            d_min,
            d_max,
            resolution,
            tol,
            out,
        } => {
            let spec = design.resolve()?;
            let prov = Provenance::new(
                "target-density",
                &json!({"spec": spec, "target": target, "d_min": d_min, "d_max": d_max, "resolution": resolution, "tol": tol}),
            )?;
            let t = target_density(&spec, *target, *d_min, *d_max, *resolution, *tol)?;
            let mut body = format!("# {}\nname,target,diameter_mm,rho_bar,evaluations\n", prov.header());
            body += &format!("{},{target},{},{},{}\n", spec.name, t.diameter_mm, t.rho_bar, t.evaluations);
            emit(out.as_deref(), &prov, started, body.as_bytes())
        }
        Command::Fit {
            input,
            x,
            y,
            model,
            degree,
            nesting_index,
            spacing,
            cell_size,
            out,
        } => {
            let (mut xs, ys) = read_columns(input, x, y)?;
            if *nesting_index {
                // nesting index i stands for the normalised spacing i * alpha / L0
                xs.iter_mut().for_each(|i| *i *= spacing / cell_size);
            }
            let fit = match model {
                FitKind::Power => fit_power_law(&xs, &ys)?,
                FitKind::Poly => fit_polynomial(&xs, &ys, *degree)?,
            };
            let prov = Provenance::new(
                "fit",
                &json!({
                    "input_sha256": file_digest(input)?, "x": x, "y": y, "model": format!("{model:?}"),
                    "degree": degree, "nesting_index": nesting_index, "spacing": spacing, "cell_size": cell_size,
                }),
            )?;
            emit(out.as_deref(), &prov, started, fit_csv(&fit, &prov).as_bytes())
        }
    }
}

impl DesignArgs {
    fn resolve(&self) -> crate::Result<NestedLatticeSpec> {
        let spec = match (&self.spec, &self.design) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path)?;
                NestedLatticeSpec::from_toml_str(&text).map_err(|e| match e {
                    Error::InvalidSpec(m) => Error::InvalidSpec(format!("{}: {m}", path.display())),
                    other => other,
                })?
            }
            (None, Some(name)) => crate::geometry::design(name)?,
            _ => return Err(Error::InvalidArgument("give exactly one of --spec and --design".into())),
        };
        Ok(spec)
    }
}

/// Writes to `out` plus its sidecar, or to stdout.
fn emit(out: Option<&Path>, prov: &Provenance, started: SystemTime, body: &[u8]) -> CliResult {
    match out {
        Some(path) => write_file(path, prov, started, body),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body).map_err(Error::from)?;
            stdout.flush().map_err(Error::from)?;
            Ok(())
        }
    }
}

fn write_file(path: &Path, prov: &Provenance, started: SystemTime, body: &[u8]) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
    }
    std::fs::write(path, body).map_err(Error::from)?;
    prov.write_sidecar(path, started)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn list(values: impl Iterator<Item = String>) -> String {
    values.collect::<Vec<_>>().join(",")
}

/// One listing line per design: name, nesting orders, angles, diameters.
pub fn catalog_lines(family: FamilyArg) -> Vec<(NestedLatticeSpec, String)> {
    let families = match family {
        FamilyArg::Mono => vec![Family::Mono],
        FamilyArg::Bi => vec![Family::Bi],
        FamilyArg::Tri => vec![Family::Tri],
        FamilyArg::All => Family::ALL.to_vec(),
    };
    families
        .into_iter()
        .flat_map(catalog)
        .map(|s| {
            let line = format!(
                "{:<14} orders={} theta_deg={} d_mm={}",
                s.name,
                list(s.orders.iter().map(|o| o.index.to_string())),
                list(s.orders.iter().map(|o| o.orientation_deg.to_string())),
                list(s.orders.iter().map(|o| o.diameter_mm.to_string())),
            );
            (s, line)
        })
        .collect()
}

/// File-system friendly design name: `XNFS:0-1:0-30` becomes `XNFS_0-1_0-30`.
pub fn file_stem(name: &str) -> String {
    name.replace([':', '/', '\\', ' '], "_")
}

fn cmd_catalog(family: FamilyArg, out_dir: Option<&Path>, started: SystemTime) -> CliResult {
    let lines = catalog_lines(family);
    let mut stdout = std::io::stdout().lock();
    for (_, line) in &lines {
        writeln!(stdout, "{line}").map_err(Error::from)?;
    }
    if let Some(dir) = out_dir {
        for (spec, _) in &lines {
            let prov = Provenance::new("catalog", &json!({ "spec": spec }))?;
            let body = format!("# {}\n{}", prov.header(), spec.to_toml_string()?);
            write_file(&dir.join(format!("{}.toml", file_stem(&spec.name))), &prov, started, body.as_bytes())?;
        }
    }
    Ok(())
}

fn cmd_generate(
    design: &DesignArgs,
    out: Option<&Path>,
    stl: Option<&Path>,
    resolution: usize,
    started: SystemTime,
) -> CliResult {
    let spec = at(design.resolve(), Stage::Geometry)?;
    let model = at(build_unit_cell(&spec), Stage::Geometry)?;
    log::info!("{}: {} segments", spec.name, model.segments.len());
    let prov = Provenance::new("generate", &json!({ "spec": spec }))?;
    let body = format!("# {}\n{}", prov.header(), model_to_string(&model));
    emit(out, &prov, started, body.as_bytes())?;
    if let Some(path) = stl {
        let prov = Provenance::new("generate-stl", &json!({ "spec": spec, "resolution": resolution }))?;
        write_stl_file(&model, resolution, path, &prov, started)?;
    }
    Ok(())
}

fn write_stl_file(model: &StrutModel, resolution: usize, path: &Path, prov: &Provenance, started: SystemTime) -> CliResult {
    let mesh = at(surface_mesh_capped(model, resolution), Stage::Voxel)?;
    let mut bytes = Vec::new();
    write_stl_labelled(&mesh, &mut bytes, &prov.stl_label())?;
    write_file(path, prov, started, &bytes)
}

fn load_model(path: &Path) -> crate::Result<(StrutModel, String)> {
    let model = read_model(path)?;
    let digest = file_digest(path)?;
    let name = if model.name().is_empty() {
        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    } else {
        model.name().to_string()
    };
    Ok((model.with_name(name), digest))
}

pub const METRICS_HEADER: &str = "name,n,rho_bar,s_bar,s_bar_cell,area_mm2";

fn cmd_metrics(model_path: &Path, resolution: usize, out: Option<&Path>, started: SystemTime) -> CliResult {
    let (model, digest) = load_model(model_path)?;
    let prov = Provenance::new("metrics", &json!({ "model_sha256": digest, "resolution": resolution }))?;
    if model.is_empty() {
        return Err(CliError::Staged(PipelineError {
            stage: Stage::Metrics,
            source: Error::EmptyModel,
        }));
    }
    let grid = at(voxelize(&model, resolution), Stage::Voxel)?;
    let m = at(surface_metrics_with_grid(&model, &grid), Stage::Metrics)?;
    let body = format!(
        "# {}\n{METRICS_HEADER}\n{},{resolution},{:.9e},{:.9e},{:.9e},{:.9e}\n",
        prov.header(),
        model.name(),
        m.rho_bar,
        m.s_bar,
        m.s_bar_cell,
        m.area_mm2
    );
    emit(out, &prov, started, body.as_bytes())
}

fn cmd_homogenize(
    model_path: &Path,
    resolution: usize,
    options: &HomogenizeOptions,
    out: Option<&Path>,
    started: SystemTime,
) -> CliResult {
    options.material.validate()?;
    let (model, digest) = load_model(model_path)?;
    let prov = Provenance::new(
        "homogenize",
        &json!({ "model_sha256": digest, "resolution": resolution, "options": options }),
    )?;
    let (stiffness, meta) = homogenize_model(&model, resolution, options)?;
    let body = format!("# {}\n{}", prov.header(), stiffness.to_text(&meta));
    emit(out, &prov, started, body.as_bytes())
}

/// Stiffness plus the metadata block written next to it.
fn homogenize_model(
    model: &StrutModel,
    resolution: usize,
    options: &HomogenizeOptions,
) -> CliResult<(StiffnessMatrix, BTreeMap<String, String>)> {
    let grid = at(voxelize(model, resolution), Stage::Voxel)?;
    let report = at(homogenize_with(&grid, options), Stage::Homogenize)?;
    let m = at(surface_metrics_with_grid(model, &grid), Stage::Metrics)?;
    let mut meta = report.metadata();
    let e = |v: f64| format!("{v:.9e}");
    meta.insert("name".into(), model.name().to_string());
    meta.insert("cell_size_mm".into(), e(model.cell_size_mm));
    meta.insert("rho_bar".into(), e(m.rho_bar));
    meta.insert("s_bar".into(), e(m.s_bar));
    meta.insert("s_bar_cell".into(), e(m.s_bar_cell));
    meta.insert("area_mm2".into(), e(m.area_mm2));
    meta.insert("youngs_modulus_gpa".into(), options.material.youngs_modulus_gpa.to_string());
    meta.insert("poisson_ratio".into(), options.material.poisson_ratio.to_string());
    meta.insert("void_contrast".into(), format!("{:e}", options.material.void_contrast));
    meta.insert("strain_magnitude".into(), format!("{:e}", options.strain_magnitude));
    Ok((report.stiffness, meta))
}

fn meta_f64(meta: &BTreeMap<String, String>, key: &str) -> Option<f64> {
    meta.get(key).and_then(|v| v.parse().ok())
}

/// Report of a stiffness file; metrics missing from its metadata come out as NaN.
fn report_from_file(path: &Path, es: Option<f64>) -> crate::Result<AnisotropyReport> {
    let (stiffness, meta) = read_stiffness(path)?;
    let es = es
        .or_else(|| meta_f64(&meta, "youngs_modulus_gpa"))
        .ok_or_else(|| Error::InvalidArgument(format!("{} records no solid modulus; pass --es", path.display())))?;
    let material = MaterialSpec {
        youngs_modulus_gpa: es,
        poisson_ratio: meta_f64(&meta, "poisson_ratio").unwrap_or(MaterialSpec::default().poisson_ratio),
        void_contrast: meta_f64(&meta, "void_contrast").unwrap_or(DEFAULT_VOID_CONTRAST),
    };
    material.validate()?;
    let metrics = SurfaceMetrics {
        rho_bar: meta_f64(&meta, "rho_bar").unwrap_or(f64::NAN),
        area_mm2: meta_f64(&meta, "area_mm2").unwrap_or(f64::NAN),
        s_bar: meta_f64(&meta, "s_bar").unwrap_or(f64::NAN),
        s_bar_cell: meta_f64(&meta, "s_bar_cell").unwrap_or(f64::NAN),
    };
    let name = meta
        .get("name")
        .cloned()
        .unwrap_or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    AnisotropyReport::from_stiffness(
        name,
        &stiffness,
        &material,
        meta.get("resolution").and_then(|r| r.parse().ok()).unwrap_or(0),
        &metrics,
        meta.get("bc_family").cloned().unwrap_or_else(|| "unknown".into()),
    )
}

/// Report CSV with the cubic-fit quality columns appended.
fn report_csv(report: &AnisotropyReport, prov: &Provenance) -> String {
    let mut header: Vec<&str> = AnisotropyReport::CSV_HEADER.to_vec();
    header.extend(["asymmetry", "cubic_deviation"]);
    let mut record = report.csv_record();
    record.push(format!("{:.9e}", report.asymmetry));
    record.push(format!("{:.9e}", report.cubic.deviation));
    format!("# {}\n{}\n{}\n", prov.header(), header.join(","), record.join(","))
}

fn cmd_analyze(path: &Path, es: Option<f64>, out: Option<&Path>, started: SystemTime) -> CliResult {
    let prov = Provenance::new("analyze", &json!({ "stiffness_sha256": file_digest(path)?, "es": es }))?;
    let report = at(report_from_file(path, es), Stage::Analysis)?;
    log::info!("{}: Z = {:.4}, {}", report.design_name, report.zener, report.class);
    emit(out, &prov, started, report_csv(&report, &prov).as_bytes())
}

fn failures_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".failures.csv");
    out.with_file_name(name)
}

fn cmd_sweep(plan_path: &Path, workers: Option<usize>, out: Option<&Path>, started: SystemTime) -> CliResult {
    let plan = read_plan(plan_path)?;
    let prov = Provenance::new("sweep", &json!({ "plan": plan }))?;
    let result = run_sweep(&plan, workers)?;
    let preamble = vec![
        prov.header(),
        format!("design {} points {} failed {}", plan.base_spec.name, plan.len(), result.failures.len()),
    ];
    let mut body = Vec::new();
    result.write_csv(&mut body, &preamble)?;
    emit(out, &prov, started, &body)?;
    match out {
        Some(path) => {
            let mut failures = Vec::new();
            result.write_failures_csv(&mut failures, &preamble[..1])?;
            write_file(&failures_path(path), &prov, started, &failures)?;
        }
        None => {
            for f in &result.failures {
                eprintln!("failed {:?} at {}: {}", f.values, f.stage, f.message);
            }
        }
    }
    Ok(())
}

fn cmd_ymsurf(path: &Path, subdiv: u32, out: &Path, es: Option<f64>, started: SystemTime) -> CliResult {
    let prov = Provenance::new(
        "ymsurf",
        &json!({ "stiffness_sha256": file_digest(path)?, "subdiv": subdiv, "es": es }),
    )?;
    let report = at(report_from_file(path, es), Stage::Analysis)?;
    let mesh = ymsurf_mesh(path, &report, subdiv)?;
    let mut body = format!("# {}\n", prov.header()).into_bytes();
    write_obj_to(&mesh, &mut body)?;
    write_file(out, &prov, started, &body)
}

fn ymsurf_mesh(path: &Path, report: &AnisotropyReport, subdiv: u32) -> CliResult<crate::voxel::TriMesh> {
    let (stiffness, _) = read_stiffness(path)?;
    let cubic = at(cubic_project(&stiffness), Stage::Analysis)?;
    at(ymsurface_mesh(&cubic, report.material.youngs_modulus_gpa, subdiv), Stage::Analysis)
}

fn cmd_export_stl(model_path: &Path, resolution: usize, out: &Path, started: SystemTime) -> CliResult {
    let (model, digest) = load_model(model_path)?;
    let prov = Provenance::new("export-stl", &json!({ "model_sha256": digest, "resolution": resolution }))?;
    write_stl_file(&model, resolution, out, &prov, started)
}

/// Files written by `nestlat run` inside the output directory.
pub const RUN_FILES: [&str; 6] = ["config.toml", "model.struts", "stiffness.txt", "report.csv", "cell.stl", "ymsurf.obj"];

fn cmd_run(config_path: &Path, started: SystemTime) -> CliResult {
    let text = std::fs::read_to_string(config_path).map_err(Error::from)?;
    let cfg = RunConfig::from_toml_str(&text).map_err(|e| match e {
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("{}: {m}", config_path.display())),
        other => other,
    })?;
    run_config(&cfg, started)
}

/// Runs a whole configuration; file names are listed in [`RUN_FILES`].
pub fn run_config(cfg: &RunConfig, started: SystemTime) -> CliResult {
    let spec = at(cfg.lattice_spec(), Stage::Geometry)?;
    let options = cfg.homogenize_options();
    let mut hashed = cfg.clone();
    hashed.output_dir = PathBuf::new();
    let prov = Provenance::new("run", &json!({ "config": hashed, "spec": spec }))?;
    let dir = &cfg.output_dir;
    let body = format!("# {}\n{}", prov.header(), cfg.to_toml_string()?);
    write_file(&dir.join(RUN_FILES[0]), &prov, started, body.as_bytes())?;

    let model = at(build_unit_cell(&spec), Stage::Geometry)?;
    if cfg.outputs.model {
        let body = format!("# {}\n{}", prov.header(), model_to_string(&model));
        write_file(&dir.join(RUN_FILES[1]), &prov, started, body.as_bytes())?;
    }
    if cfg.outputs.stl {
        write_stl_file(&model, cfg.resolution, &dir.join(RUN_FILES[4]), &prov, started)?;
    }
    if !(cfg.outputs.stiffness || cfg.outputs.report || cfg.outputs.ymsurf) {
        return Ok(());
    }
    let (stiffness, meta) = homogenize_model(&model, cfg.resolution, &options)?;
    let stiffness_path = dir.join(RUN_FILES[2]);
    let text = format!("# {}\n{}", prov.header(), stiffness.to_text(&meta));
    write_file(&stiffness_path, &prov, started, text.as_bytes())?;
    let report = at(report_from_file(&stiffness_path, None), Stage::Analysis)?;
    if cfg.outputs.report {
        write_file(&dir.join(RUN_FILES[3]), &prov, started, report_csv(&report, &prov).as_bytes())?;
    }
    if cfg.outputs.ymsurf {
        let mesh = ymsurf_mesh(&stiffness_path, &report, cfg.outputs.ymsurf_subdivisions)?;
        let mut body = format!("# {}\n", prov.header()).into_bytes();
        write_obj_to(&mesh, &mut body)?;
        write_file(&dir.join(RUN_FILES[5]), &prov, started, &body)?;
    }
    if !cfg.outputs.stiffness {
        std::fs::remove_file(&stiffness_path).map_err(Error::from)?;
        std::fs::remove_file(sidecar_path(&stiffness_path)).map_err(Error::from)?;
    }
    Ok(())
}

/// Two numeric columns of a CSV file; `#` lines are skipped.
fn read_columns(path: &Path, x: &str, y: &str) -> crate::Result<(Vec<f64>, Vec<f64>)> {
    let bad = |m: String| Error::Parse {
        path: path.to_path_buf(),
        message: m,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("no column {name:?}")))
    };
    let (ix, iy) = (col(x)?, col(y)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let value = |i: usize| -> crate::Result<f64> {
            record
                .get(i)
                .unwrap_or("")
                .parse()
                .map_err(|e| bad(format!("row {}: {e}", row + 1)))
        };
        xs.push(value(ix)?);
        ys.push(value(iy)?);
    }
    Ok((xs, ys))
}

fn fit_csv(fit: &FitResult, prov: &Provenance) -> String {
    let (label, names): (&str, Vec<String>) = match fit.model {
        crate::analysis::FitModel::PowerLaw => ("power", vec!["c".into(), "n".into()]),
        crate::analysis::FitModel::Polynomial { degree } => {
            ("poly", (0..=degree).rev().map(|p| format!("p{p}")).collect())
        }
    };
    let values: Vec<String> = fit.coefficients.iter().map(|c| format!("{c:.12e}")).collect();
    format!(
        "# {}\nmodel,r_squared,{}\n{label},{:.12e},{}\n",
        prov.header(),
        names.join(","),
        fit.r_squared,
        values.join(",")
    )
}
