//! Command-line front end.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use smagvem_core::cases::make_case;

use crate::config::{Family, Guess, RunConfig, Scaling};
use crate::error::{Result, SolverError};
use crate::io::{self, MeshStats, RunManifest, FORMAT_VERSION};
use crate::newton::NewtonTrace;
use crate::reference::{bundled_profiles, find_profile, preferred_profile, ReferenceSource};
use crate::verification::{self, CavityRun};

/// Environment variable naming the directory under which runs are written.
pub const OUTPUT_ROOT_ENV: &str = "SMAGVEM_OUTPUT";

#[derive(Debug, Parser)]
#[command(name = "smagvem", version, about = "Steady Navier-Stokes with Smagorinsky closure on polygonal meshes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a mesh and write it as JSON.
    Mesh(MeshArgs),
    /// Run a manufactured-solution convergence study.
    Convergence(ConvergenceArgs),
    /// Solve the lid-driven cavity and write VTK fields.
    Cavity(CavityArgs),
    /// Solve the cavity and compare midline profiles with reference data.
    Profiles(ProfilesArgs),
    /// Collect run manifests into one table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct MeshFlags {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Refinement levels of the hanging-node family.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Half-width of the refined band of the hanging-node family.
    #[arg(long)]
    pub delta0: Option<f64>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum FamilyArg {
    Usm,
    Arm,
    Imh,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ScalingArg {
    #[value(name = "h_T")]
    CellDiameter,
    #[value(name = "h_star_F")]
    MinFace,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum GuessArg {
    Zero,
    Stokes,
    Continuation,
}

#[derive(Debug, Args)]
pub struct SolverFlags {
    /// TOML configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub no_smagorinsky: bool,
    #[arg(long)]
    pub cs: Option<f64>,
    #[arg(long, value_enum)]
    pub scaling: Option<ScalingArg>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, value_enum)]
    pub guess: Option<GuessArg>,
    /// Comma-separated Reynolds ladder for `--guess continuation`.
    #[arg(long, value_delimiter = ',')]
    pub ramp: Option<Vec<f64>>,
    /// Output directory; defaults to a named folder under `$SMAGVEM_OUTPUT`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    #[command(flatten)]
    pub mesh: MeshFlags,
    /// Output file; defaults to `<root>/mesh-<family>-<n>.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    /// `irrotational` or `p2p1`.
    #[arg(long)]
    pub case: Option<String>,
    /// `λ` for `irrotational` (default 10), `Re` for `p2p1` (default 10000).
    #[arg(long)]
    pub param: Option<f64>,
    /// Comma-separated mesh sizes `h = 1/N`, coarsest first.
    #[arg(long, value_delimiter = ',', required = true)]
    pub h: Vec<f64>,
    #[command(flatten)]
    pub mesh: MeshFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct CavityArgs {
    #[arg(long)]
    pub re: Option<f64>,
    #[command(flatten)]
    pub mesh: MeshFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct ProfilesArgs {
    #[command(flatten)]
    pub cavity: CavityArgs,
    /// Reference table; defaults to Erturk when tabulated, else Ghia.
    #[arg(long)]
    pub source: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directories searched recursively for `manifest.json`.
    #[arg(required = true)]
    pub dirs: Vec<PathBuf>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("output"))
}

fn apply_mesh_flags(cfg: &mut RunConfig, m: &MeshFlags) {
    if let Some(f) = m.family {
        cfg.mesh.family = match f {
            FamilyArg::Usm => Family::Usm,
            FamilyArg::Arm => Family::Arm,
            FamilyArg::Imh => Family::Imh,
        };
    }
    if let Some(n) = m.n {
        cfg.mesh.n = n;
    }
    if let Some(l) = m.levels {
        cfg.mesh.levels = l;
    }
    if let Some(d) = m.delta0 {
        cfg.mesh.delta0 = d;
    }
}

fn load_config(s: &SolverFlags, m: &MeshFlags) -> Result<RunConfig> {
    let mut cfg = match &s.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    apply_mesh_flags(&mut cfg, m);
    if let Some(k) = s.k {
        cfg.k = k;
    }
    if s.no_smagorinsky {
        cfg.smagorinsky.enabled = false;
    }
    if let Some(cs) = s.cs {
        cfg.smagorinsky.cs = cs;
    }
    if let Some(sc) = s.scaling {
        cfg.smagorinsky.scaling = match sc {
            ScalingArg::CellDiameter => Scaling::CellDiameter,
            ScalingArg::MinFace => Scaling::MinFace,
        };
    }
    if let Some(e) = s.epsilon {
        cfg.newton.epsilon = e;
    }
    if let Some(m) = s.max_iters {
        cfg.newton.max_iters = m;
    }
    if let Some(g) = s.guess {
        cfg.newton.guess = match g {
            GuessArg::Zero => Guess::Zero,
            GuessArg::Stokes => Guess::Stokes,
            GuessArg::Continuation => Guess::Continuation,
        };
    }
    if let Some(r) = &s.ramp {
        cfg.newton.ramp = r.clone();
    }
    if let Some(o) = &s.out {
        cfg.output = Some(o.clone());
    }
    Ok(cfg)
}

fn config_json(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null)
}

fn trace_fields(trace: &NewtonTrace) -> (String, usize, Option<f64>) {
    let outcome = if trace.converged() { "converged" } else { "diverged" };
    (outcome.to_string(), trace.iterations(), Some(trace.final_residual()))
}

/// Runs the parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Mesh(a) => cmd_mesh(&a),
        Command::Convergence(a) => cmd_convergence(&a),
        Command::Cavity(a) => cmd_cavity(&a, None),
        Command::Profiles(a) => cmd_cavity(&a.cavity, Some(a.source.as_deref())),
        Command::Report(a) => cmd_report(&a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn cmd_mesh(a: &MeshArgs) -> Result<()> {
    let mut cfg = RunConfig::default();
    apply_mesh_flags(&mut cfg, &a.mesh);
    cfg.validate()?;
    let mesh = cfg.mesh.family().build()?;
    let path = a
        .out
        .clone()
        .unwrap_or_else(|| output_root().join(format!("mesh-{}-{}.json", cfg.mesh.family.as_str(), cfg.mesh.n)));
    io::write_mesh(&mesh, &path)?;
    println!(
        "{}: {} cells, {} vertices, {} hanging nodes, h = {:.6}",
        path.display(),
        mesh.n_cells(),
        mesh.vertices.len(),
        mesh.hanging_nodes().len(),
        mesh.h
    );
    Ok(())
}

/// `N = 1/h`, which must be an integer.
pub fn segments_for(h: f64) -> Result<usize> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(SolverError::InvalidArgument(format!("mesh size {h} must lie in (0, 1]")));
    }
    let n = (1.0 / h).round();
    if (n * h - 1.0).abs() > 1e-9 {
        return Err(SolverError::InvalidArgument(format!("mesh size {h} is not the reciprocal of an integer")));
    }
    Ok(n as usize)
}

fn cmd_convergence(a: &ConvergenceArgs) -> Result<()> {
    let mut cfg = load_config(&a.solver, &a.mesh)?;
    if let Some(c) = &a.case {
        cfg.case = Some(c.clone());
    }
    if let Some(p) = a.param {
        cfg.case_param = Some(p);
    }
    cfg.validate()?;
    let name = cfg.case.clone().ok_or_else(|| SolverError::Config("`case`: required for a convergence study".into()))?;
    let param = cfg.case_param.unwrap_or(if name == "p2p1" { 1e4 } else { 10.0 });
    let mut case = make_case(&name, param)?;
    if name == "p2p1" {
        case = case.with_smagorinsky(cfg.smagorinsky.model());
    }
    let ns = a.h.iter().map(|&h| segments_for(h)).collect::<Result<Vec<_>>>()?;
    let newton = verification::manufactured_config(&case, &cfg.newton.solver(|| vec![1.0, 10.0, 100.0, 1000.0]));
    let dir = cfg
        .output
        .clone()
        .unwrap_or_else(|| output_root().join(format!("convergence-{name}-k{}-{}", cfg.k, cfg.mesh.family.as_str())));
    let start = Instant::now();
    let result = verification::convergence_study(case, cfg.mesh.family.into(), &ns, cfg.k, &newton);
    let mut manifest = RunManifest {
        format_version: FORMAT_VERSION,
        command: "convergence".into(),
        config: config_json(&cfg),
        mesh: None,
        outcome: "converged".into(),
        iterations: 0,
        final_residual: None,
        errors: BTreeMap::new(),
        wall_time_s: 0.0,
        message: None,
    };
    match &result {
        Ok(reports) => {
            io::write_bytes(&dir.join("convergence.csv"), &io::convergence_csv(reports)?)?;
            if let Some(last) = reports.last() {
                manifest.mesh = Some(MeshStats {
                    family: cfg.mesh.family.as_str().into(),
                    n: last.n,
                    cells: 0,
                    vertices: 0,
                    dofs: last.dofs,
                    h: last.h,
                });
                manifest.iterations = last.trace.iterations();
                manifest.final_residual = Some(last.trace.final_residual());
                manifest.errors.insert("grad".into(), last.norms.grad);
                manifest.errors.insert("l2".into(), last.norms.l2);
                manifest.errors.insert("pressure".into(), last.norms.pressure);
                manifest.errors.insert("divergence".into(), reports.iter().map(|r| r.divergence).fold(0.0, f64::max));
            }
            for r in reports {
                println!(
                    "h = {:.4}  grad {:.4e} ({})  l2 {:.4e} ({})  p {:.4e} ({})",
                    r.h,
                    r.norms.grad,
                    fmt_rate(r.rates[0]),
                    r.norms.l2,
                    fmt_rate(r.rates[1]),
                    r.norms.pressure,
                    fmt_rate(r.rates[2])
                );
            }
        }
        Err(e) => {
            manifest.outcome = "diverged".into();
            manifest.message = Some(e.to_string());
        }
    }
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    io::write_manifest(&manifest, &dir.join("manifest.json"))?;
    result.map(|_| ())
}

fn fmt_rate(r: Option<f64>) -> String {
    r.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

fn cmd_cavity(a: &CavityArgs, profiles: Option<Option<&str>>) -> Result<()> {
    let mut cfg = load_config(&a.solver, &a.mesh)?;
    if let Some(re) = a.re {
        cfg.re = Some(re);
    }
    cfg.validate()?;
    let re = cfg.cavity_re()?;
    let reference = match profiles {
        Some(src) => {
            let all = bundled_profiles()?;
            Some(match src {
                Some(s) => find_profile(&all, ReferenceSource::parse(s)?, re)?.clone(),
                None => preferred_profile(&all, re)?.clone(),
            })
        }
        None => None,
    };
    let newton = cfg.newton.solver(|| verification::default_ramp(re));
    newton.validate()?;
    let family = cfg.mesh.family();
    let command = if profiles.is_some() { "profiles" } else { "cavity" };
    let dir = cfg.output.clone().unwrap_or_else(|| {
        output_root().join(format!("{command}-{}-{}-re{re}-k{}", cfg.mesh.family.as_str(), cfg.mesh.n, cfg.k))
    });
    let start = Instant::now();
    let smag = cfg.smagorinsky.model();
    let mut manifest = RunManifest {
        format_version: FORMAT_VERSION,
        command: command.into(),
        config: config_json(&cfg),
        mesh: None,
        outcome: "diverged".into(),
        iterations: 0,
        final_residual: None,
        errors: BTreeMap::new(),
        wall_time_s: 0.0,
        message: None,
    };
    let solved = family.build().map_err(SolverError::from).and_then(|m| verification::solve_cavity(m, re, cfg.k, smag, &newton));
    let result = match solved {
        Ok(CavityRun { problem, state, trace }) => {
            manifest.mesh = Some(MeshStats::of(&problem, cfg.mesh.family.as_str(), cfg.mesh.n));
            (manifest.outcome, manifest.iterations, manifest.final_residual) = trace_fields(&trace);
            io::write_bytes(&dir.join("trace.csv"), &io::trace_csv(&trace)?)?;
            manifest.errors.insert("divergence".into(), verification::divergence_defect(&problem, &state));
            if let Some(r) = &reference {
                let p = verification::sample_profiles(&problem, &state, &r.ys(), &r.xs())?;
                let err = crate::core::norms::relative_l2(
                    &p.ux.iter().chain(&p.uy).copied().collect::<Vec<_>>(),
                    &r.values(),
                );
                manifest.errors.insert(format!("reference_{}", r.source.as_str()), err);
                io::write_bytes(&dir.join("profiles.csv"), &io::profiles_csv(&p, Some(&r.values()))?)?;
                println!("relative l2 error against {} at Re = {}: {err:.4e}", r.source, r.re);
            } else {
                io::write_vtk(&problem, &state, smag.as_ref(), &dir.join("solution.vtk"))?;
            }
            if trace.converged() {
                Ok(())
            } else {
                Err(SolverError::NotConverged(format!("Re = {re}: {} after {} iterations", trace.outcome.as_str(), trace.iterations())))
            }
        }
        Err(e) => Err(e),
    };
    if let Err(e) = &result {
        manifest.outcome = "diverged".into();
        manifest.message = Some(e.to_string());
    }
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    io::write_manifest(&manifest, &dir.join("manifest.json"))?;
    println!("{}: {}", dir.display(), manifest.outcome);
    result
}

fn collect_manifests(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| SolverError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| SolverError::io(dir, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_manifests(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == "manifest.json") {
            out.push(p);
        }
    }
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> Result<()> {
    let mut paths = Vec::new();
    for d in &a.dirs {
        collect_manifests(d, &mut paths)?;
    }
    let manifests = paths
        .iter()
        .map(|p| {
            let run = p.parent().and_then(|d| d.file_name()).map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((run, io::read_manifest(p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let csv = io::report_csv(&manifests)?;
    match &a.out {
        Some(p) => io::write_bytes(p, &csv),
        None => {
            print!("{}", String::from_utf8_lossy(&csv));
            Ok(())
        }
    }
}
