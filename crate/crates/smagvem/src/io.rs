//! File formats: mesh JSON, legacy VTK, CSV tables and run manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use smagvem_core::assembly::{DiscreteState, Smagorinsky};
use smagvem_core::mesh::{BoundaryMarker, PolygonalMesh};
use smagvem_core::Point2;

use crate::error::{Result, SolverError};
use crate::newton::NewtonTrace;
use crate::problem::Problem;
use crate::verification::{ErrorReport, Profiles};

/// Manifest schema version.
pub const FORMAT_VERSION: u32 = 1;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| SolverError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| SolverError::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| SolverError::io(path, e))
}

fn raw(v: f64) -> Result<Box<RawValue>> {
    if !v.is_finite() {
        return Err(SolverError::Format(format!("non-finite value {v}")));
    }
    RawValue::from_string(real(v)).map_err(|e| SolverError::Format(e.to_string()))
}

#[derive(Serialize)]
struct MeshOut {
    vertices: Vec<[Box<RawValue>; 2]>,
    cells: Vec<Vec<usize>>,
    boundary_markers: BTreeMap<String, &'static str>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshIn {
    vertices: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
    boundary_markers: BTreeMap<String, String>,
}

/// Mesh as JSON. Boundary faces are keyed `"a-b"` with `a < b`.
pub fn mesh_to_json(mesh: &PolygonalMesh) -> Result<String> {
    let vertices = mesh.vertices.iter().map(|p| Ok([raw(p.x)?, raw(p.y)?])).collect::<Result<_>>()?;
    let boundary_markers =
        mesh.boundary_markers().into_iter().map(|((a, b), m)| (format!("{a}-{b}"), m.as_str())).collect();
    let out = MeshOut { vertices, cells: mesh.loops(), boundary_markers };
    serde_json::to_string_pretty(&out).map_err(|e| SolverError::Format(e.to_string()))
}

pub fn mesh_from_json(text: &str) -> Result<PolygonalMesh> {
    let m: MeshIn = serde_json::from_str(text).map_err(|e| SolverError::Format(format!("mesh JSON: {e}")))?;
    let mut markers = BTreeMap::new();
    for (key, value) in &m.boundary_markers {
        let bad = || SolverError::Format(format!("mesh JSON: bad boundary face `{key}`"));
        let (a, b) = key.split_once('-').ok_or_else(bad)?;
        let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
        let marker = BoundaryMarker::parse(value)
            .ok_or_else(|| SolverError::Format(format!("mesh JSON: unknown marker `{value}`")))?;
        markers.insert((a.min(b), a.max(b)), marker);
    }
    let vertices = m.vertices.iter().map(|&[x, y]| Point2::new(x, y)).collect();
    Ok(PolygonalMesh::from_loops_with_markers(vertices, m.cells, &markers)?)
}

pub fn write_mesh(mesh: &PolygonalMesh, path: &Path) -> Result<()> {
    write_file(path, mesh_to_json(mesh)?.as_bytes())
}

pub fn read_mesh(path: &Path) -> Result<PolygonalMesh> {
    mesh_from_json(&read_file(path)?)
}

/// `Π0 u_h` at every mesh vertex, averaged over the incident cells.
pub fn vertex_velocity(problem: &Problem, state: &DiscreteState) -> Vec<[f64; 2]> {
    let mesh = &problem.mesh;
    let mut sum = vec![[0.0; 2]; mesh.vertices.len()];
    let mut count = vec![0usize; mesh.vertices.len()];
    for (c, o) in problem.disc.ops.iter().enumerate() {
        let coeffs = o.apply(&o.pi_zero, &problem.disc.local_velocity(state, c));
        for &v in &mesh.cells[c].vertices {
            let u = o.eval_vector(&coeffs, mesh.vertices[v]);
            sum[v][0] += u[0];
            sum[v][1] += u[1];
            count[v] += 1;
        }
    }
    sum.iter().zip(&count).map(|(s, &n)| if n == 0 { [0.0; 2] } else { [s[0] / n as f64, s[1] / n as f64] }).collect()
}

/// `p_h` at each cell barycenter.
pub fn cell_pressure(problem: &Problem, state: &DiscreteState) -> Vec<f64> {
    let disc = &problem.disc;
    (0..disc.n_cells())
        .map(|c| disc.ops[c].eval_scalar_km1(disc.local_pressure(state, c), problem.mesh.cells[c].barycenter))
        .collect()
}

/// Legacy ASCII VTK with polygon cells, vertex velocity, cell pressure and
/// the cell-averaged eddy viscosity (zero without a Smagorinsky model).
pub fn vtk_string(problem: &Problem, state: &DiscreteState, smagorinsky: Option<&Smagorinsky>) -> String {
    let mesh = &problem.mesh;
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str(
        "velocity: P0 projection at vertices averaged over incident cells; \
         pressure: value at cell barycenter; lid corners carry the lid velocity\n",
    );
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.vertices.len());
    for p in &mesh.vertices {
        let _ = writeln!(s, "{} {} 0", real(p.x), real(p.y));
    }
    let size: usize = mesh.cells.iter().map(|c| c.vertices.len() + 1).sum();
    let _ = writeln!(s, "CELLS {} {size}", mesh.n_cells());
    for c in &mesh.cells {
        let _ = write!(s, "{}", c.vertices.len());
        for v in &c.vertices {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {}", mesh.n_cells());
    for _ in &mesh.cells {
        s.push_str("7\n");
    }
    let _ = writeln!(s, "POINT_DATA {}", mesh.vertices.len());
    s.push_str("VECTORS velocity double\n");
    for u in vertex_velocity(problem, state) {
        let _ = writeln!(s, "{} {} 0", real(u[0]), real(u[1]));
    }
    let _ = writeln!(s, "CELL_DATA {}", mesh.n_cells());
    s.push_str("SCALARS pressure double 1\nLOOKUP_TABLE default\n");
    for p in cell_pressure(problem, state) {
        let _ = writeln!(s, "{}", real(p));
    }
    let nu_s = match smagorinsky {
        Some(m) => problem.disc.eddy_viscosity(state, m),
        None => vec![0.0; mesh.n_cells()],
    };
    s.push_str("SCALARS eddy_viscosity double 1\nLOOKUP_TABLE default\n");
    for v in nu_s {
        let _ = writeln!(s, "{}", real(v));
    }
    s
}

pub fn write_vtk(problem: &Problem, state: &DiscreteState, smagorinsky: Option<&Smagorinsky>, path: &Path) -> Result<()> {
    write_file(path, vtk_string(problem, state, smagorinsky).as_bytes())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fmt = |e: csv::Error| SolverError::Format(e.to_string());
    w.write_record(header).map_err(fmt)?;
    for r in rows {
        w.write_record(&r).map_err(fmt)?;
    }
    w.into_inner().map_err(|e| SolverError::Format(e.to_string()))
}

fn opt(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

pub const CONVERGENCE_HEADER: [&str; 7] = ["h", "grad_err", "grad_rate", "l2_err", "l2_rate", "p_err", "p_rate"];

/// Convergence table; the first row has empty rates.
pub fn convergence_csv(reports: &[ErrorReport]) -> Result<Vec<u8>> {
    csv_bytes(
        &CONVERGENCE_HEADER,
        reports.iter().map(|r| {
            vec![
                real(r.h),
                real(r.norms.grad),
                opt(r.rates[0]),
                real(r.norms.l2),
                opt(r.rates[1]),
                real(r.norms.pressure),
                opt(r.rates[2]),
            ]
        }),
    )
}

pub fn trace_csv(trace: &NewtonTrace) -> Result<Vec<u8>> {
    csv_bytes(
        &["iter", "residual_norm"],
        trace.residuals.iter().enumerate().map(|(i, r)| vec![i.to_string(), real(*r)]),
    )
}

/// Midline samples; `reference` holds the tabulated values in the same
/// order as the samples (u first), if available.
pub fn profiles_csv(p: &Profiles, reference: Option<&[f64]>) -> Result<Vec<u8>> {
    let samples = p
        .ys
        .iter()
        .zip(&p.ux)
        .map(|(c, v)| ("u", *c, *v))
        .chain(p.xs.iter().zip(&p.uy).map(|(c, v)| ("v", *c, *v)));
    let rows: Vec<Vec<String>> = samples
        .enumerate()
        .map(|(i, (axis, c, v))| {
            vec![axis.to_string(), real(c), real(v), opt(reference.and_then(|r| r.get(i).copied()))]
        })
        .collect();
    csv_bytes(&["axis", "coord", "value", "reference"], rows)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    write_file(path, bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub family: String,
    pub n: usize,
    pub cells: usize,
    pub vertices: usize,
    pub dofs: usize,
    pub h: f64,
}

impl MeshStats {
    pub fn of(problem: &Problem, family: &str, n: usize) -> Self {
        Self {
            family: family.to_string(),
            n,
            cells: problem.mesh.n_cells(),
            vertices: problem.mesh.vertices.len(),
            dofs: problem.n_unknowns(),
            h: problem.mesh.h,
        }
    }
}

/// Summary of one run, written once as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub format_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub mesh: Option<MeshStats>,
    /// `converged`, `diverged` or `max_iters`.
    pub outcome: String,
    pub iterations: usize,
    pub final_residual: Option<f64>,
    pub errors: BTreeMap<String, f64>,
    pub wall_time_s: f64,
    pub message: Option<String>,
}

pub fn write_manifest(m: &RunManifest, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(m).map_err(|e| SolverError::Format(e.to_string()))?;
    write_file(path, text.as_bytes())
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    serde_json::from_str(&read_file(path)?).map_err(|e| SolverError::Format(format!("{}: {e}", path.display())))
}

/// One row per manifest. Error columns are the sorted union of all error
/// names; missing entries are empty.
pub fn report_csv(manifests: &[(String, RunManifest)]) -> Result<Vec<u8>> {
    let names: std::collections::BTreeSet<&str> =
        manifests.iter().flat_map(|(_, m)| m.errors.keys().map(String::as_str)).collect();
    let mut header = vec!["run", "command", "family", "n", "cells", "dofs", "outcome", "iterations", "final_residual"];
    header.extend(names.iter().copied());
    header.push("wall_time_s");
    let rows = manifests.iter().map(|(run, m)| {
        let mesh = m.mesh.as_ref();
        let mut r = vec![
            run.clone(),
            m.command.clone(),
            mesh.map(|s| s.family.clone()).unwrap_or_default(),
            mesh.map(|s| s.n.to_string()).unwrap_or_default(),
            mesh.map(|s| s.cells.to_string()).unwrap_or_default(),
            mesh.map(|s| s.dofs.to_string()).unwrap_or_default(),
            m.outcome.clone(),
            m.iterations.to_string(),
            opt(m.final_residual),
        ];
        r.extend(names.iter().map(|n| opt(m.errors.get(*n).copied())));
        r.push(format!("{:.3}", m.wall_time_s));
        r
    });
    csv_bytes(&header, rows)
}
