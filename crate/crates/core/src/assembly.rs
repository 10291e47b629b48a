//! Global DoF numbering, per-cell residual and Jacobian kernels, and the
//! deterministic scatter into the saddle-point system.
//!
//! Unknown vector layout: `[free velocity DoFs | pressure | mean multiplier]`.
//! The discrete state always carries the full velocity vector, Dirichlet DoFs
//! included, so Newton updates are simply zero there.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::basis::dim;
use crate::mesh::PolygonalMesh;
use crate::quadrature;
use crate::vem::{element_operators, ElementOperators};
use crate::{Error, Point2, Result};

/// The Smagorinsky constant commonly used for LES.
pub const SMAGORINSKY_CONSTANT: f64 = 0.1;

/// Below this Frobenius norm of the projected gradient the derivative of the
/// eddy viscosity is taken as zero.
pub const EDDY_GRADIENT_FLOOR: f64 = 1e-12;

/// Length scale entering the eddy viscosity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EddyScaling {
    /// Cell diameter `h_T`.
    CellDiameter,
    /// Shortest face of the cell `h*_F`.
    MinFace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellScale {
    pub h_t: f64,
    pub h_star_f: f64,
}

impl EddyScaling {
    pub fn length(self, s: CellScale) -> f64 {
        match self {
            Self::CellDiameter => s.h_t,
            Self::MinFace => s.h_star_f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smagorinsky {
    pub cs: f64,
    pub scaling: EddyScaling,
}

impl Default for Smagorinsky {
    fn default() -> Self {
        Self { cs: SMAGORINSKY_CONSTANT, scaling: EddyScaling::CellDiameter }
    }
}

impl Smagorinsky {
    /// `C_S^2 s_T^2`.
    pub fn factor(&self, s: CellScale) -> f64 {
        let l = self.scaling.length(s);
        self.cs * self.cs * l * l
    }
}

/// Which terms enter the residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physics {
    pub nu: f64,
    pub convection: bool,
    pub smagorinsky: Option<Smagorinsky>,
}

impl Physics {
    pub fn stokes(nu: f64) -> Self {
        Self { nu, convection: false, smagorinsky: None }
    }

    pub fn navier_stokes(nu: f64) -> Self {
        Self { nu, convection: true, smagorinsky: None }
    }

    pub fn with_smagorinsky(mut self, s: Smagorinsky) -> Self {
        self.smagorinsky = Some(s);
        self
    }

    /// The same viscosity without convection or eddy viscosity.
    pub fn linearized(&self) -> Self {
        Self::stokes(self.nu)
    }
}

/// Body force, evaluated per cell (the manufactured Smagorinsky forcing
/// depends on the cell length scale).
pub type Forcing<'a> = &'a (dyn Fn(CellScale, Point2) -> [f64; 2] + Sync);

/// Sentinel in [`DofMap::free_index`] for Dirichlet DoFs.
pub const FIXED: usize = usize::MAX;

/// Global numbering of velocity and pressure DoFs.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub k: usize,
    pub n_velocity: usize,
    pub n_pressure: usize,
    /// Local-to-global velocity DoFs, per cell.
    pub cell_velocity: Vec<Vec<usize>>,
    /// Position and component of every nodal velocity DoF; `None` for moments.
    pub sites: Vec<Option<(Point2, usize)>>,
    pub dirichlet: Vec<bool>,
    /// Index among free DoFs, or [`FIXED`].
    pub free_index: Vec<usize>,
    pub n_free: usize,
}

impl DofMap {
    /// Vertex `v` owns DoFs `2v, 2v+1`; face `f` point `j` owns
    /// `2 NV + 2 (k-1) f + 2 j + c`; moments are numbered per cell after all
    /// shared DoFs. Every boundary vertex and edge point is Dirichlet.
    pub fn new(mesh: &PolygonalMesh, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Unsupported(alloc::format!("velocity order k = {k}; k >= 2 is required")));
        }
        let nv = mesh.vertices.len();
        let nf = mesh.faces.len();
        let shared = 2 * nv + 2 * (k - 1) * nf;
        let n1 = dim(k - 1);
        let n_private = n1 - 1 + crate::basis::dim_signed(k as isize - 3);
        let n_velocity = shared + n_private * mesh.cells.len();
        let (gl, _) = quadrature::gauss_lobatto(k + 1);

        let mut sites = vec![None; n_velocity];
        for (v, &p) in mesh.vertices.iter().enumerate() {
            sites[2 * v] = Some((p, 0));
            sites[2 * v + 1] = Some((p, 1));
        }
        let mut dirichlet = vec![false; n_velocity];
        for (f, face) in mesh.faces.iter().enumerate() {
            let [a, b] = face.vertices;
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            for j in 0..k - 1 {
                let p = pa.lerp(pb, 0.5 * (gl[j + 1] + 1.0));
                for c in 0..2 {
                    let g = 2 * nv + 2 * (k - 1) * f + 2 * j + c;
                    sites[g] = Some((p, c));
                    dirichlet[g] = face.is_boundary();
                }
            }
            if face.is_boundary() {
                for v in [a, b] {
                    dirichlet[2 * v] = true;
                    dirichlet[2 * v + 1] = true;
                }
            }
        }

        let mut cell_velocity = Vec::with_capacity(mesh.cells.len());
        for (c, cell) in mesh.cells.iter().enumerate() {
            let n = cell.vertices.len();
            let mut map = Vec::with_capacity(2 * n * k + n_private);
            for &v in &cell.vertices {
                map.extend_from_slice(&[2 * v, 2 * v + 1]);
            }
            for e in 0..n {
                let f = cell.faces[e];
                let forward = mesh.faces[f].vertices[0] == cell.vertices[e];
                for j in 0..k - 1 {
                    let fj = if forward { j } else { k - 2 - j };
                    let g = 2 * nv + 2 * (k - 1) * f + 2 * fj;
                    map.extend_from_slice(&[g, g + 1]);
                }
            }
            let base = shared + c * n_private;
            map.extend(base..base + n_private);
            cell_velocity.push(map);
        }

        let mut free_index = vec![FIXED; n_velocity];
        let mut n_free = 0;
        for (g, fixed) in dirichlet.iter().enumerate() {
            if !fixed {
                free_index[g] = n_free;
                n_free += 1;
            }
        }
        Ok(Self {
            k,
            n_velocity,
            n_pressure: n1 * mesh.cells.len(),
            cell_velocity,
            sites,
            dirichlet,
            free_index,
            n_free,
        })
    }

    /// Size of the Newton unknown vector.
    pub fn n_unknowns(&self) -> usize {
        self.n_free + self.n_pressure + 1
    }

    pub fn pressure_offset(&self, cell: usize) -> usize {
        cell * dim(self.k - 1)
    }

    /// Row of the mean-value multiplier in the unknown vector.
    pub fn multiplier_row(&self) -> usize {
        self.n_free + self.n_pressure
    }

    pub fn n_dirichlet(&self) -> usize {
        self.dirichlet.iter().filter(|&&d| d).count()
    }
}

/// Velocity (full vector), piecewise `P_{k-1}` pressure and the mean multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteState {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    pub multiplier: f64,
}

impl DiscreteState {
    pub fn is_finite(&self) -> bool {
        self.velocity.iter().chain(&self.pressure).all(|v| v.is_finite()) && self.multiplier.is_finite()
    }
}

/// Local residual (velocity rows, without the pressure term) and Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalContribution {
    pub residual: Vec<f64>,
    pub jacobian: Option<DMatrix<f64>>,
}

/// Assembled residual and, optionally, the Jacobian as summed triplets sorted by
/// `(row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub n: usize,
    pub residual: Vec<f64>,
    pub triplets: Vec<(usize, usize, f64)>,
}

/// Sorts triplets by `(row, col)` and sums duplicates.
pub fn compress_triplets(mut t: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    t.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len() / 2);
    for (r, c, v) in t {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => out.push((r, c, v)),
        }
    }
    out
}

/// Mesh, DoF map and element operators for one order `k`.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub k: usize,
    pub dofs: DofMap,
    pub ops: Vec<ElementOperators>,
    pub scales: Vec<CellScale>,
}

/// Per-quadrature-point tables of the projected basis functions.
struct PointTables {
    /// `Π0 φ_j`, component-major: `v0[a * ndof + j]`.
    v0: Vec<f64>,
    /// `Π0∇ φ_j`: `g0[(2a + b) * ndof + j]`.
    g0: Vec<f64>,
    /// `∇Π∇ φ_j`, same layout.
    gn: Vec<f64>,
}

impl PointTables {
    fn new(ndof: usize) -> Self {
        Self { v0: vec![0.0; 2 * ndof], g0: vec![0.0; 4 * ndof], gn: vec![0.0; 4 * ndof] }
    }

    fn fill(&mut self, ops: &ElementOperators, m: &[f64], need_grad_nabla: bool) {
        let ndof = ops.ndof();
        let nk = dim(ops.k);
        let n1 = dim(ops.k - 1);
        for a in 0..2 {
            for j in 0..ndof {
                let mut s = 0.0;
                for i in 0..nk {
                    s += ops.pi_zero[(a * nk + i, j)] * m[i];
                }
                self.v0[a * ndof + j] = s;
            }
        }
        for t in 0..4 {
            for j in 0..ndof {
                let mut s = 0.0;
                for i in 0..n1 {
                    s += ops.pi_zero_grad[(t * n1 + i, j)] * m[i];
                }
                self.g0[t * ndof + j] = s;
            }
        }
        if need_grad_nabla {
            for t in 0..4 {
                for j in 0..ndof {
                    let mut s = 0.0;
                    for i in 0..n1 {
                        s += ops.grad_pi_nabla[(t * n1 + i, j)] * m[i];
                    }
                    self.gn[t * ndof + j] = s;
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Discretization {
    pub fn new(mesh: &PolygonalMesh, k: usize) -> Result<Self> {
        let ops = (0..mesh.cells.len()).map(|c| element_operators(mesh, c, k)).collect::<Result<Vec<_>>>()?;
        Self::from_operators(mesh, k, ops)
    }

    /// Uses precomputed element operators (one per cell, in cell order).
    pub fn from_operators(mesh: &PolygonalMesh, k: usize, ops: Vec<ElementOperators>) -> Result<Self> {
        if ops.len() != mesh.cells.len() {
            return Err(Error::Assembly(alloc::format!(
                "{} element operators for {} cells",
                ops.len(),
                mesh.cells.len()
            )));
        }
        let dofs = DofMap::new(mesh, k)?;
        for (c, o) in ops.iter().enumerate() {
            if o.k != k || o.ndof() != dofs.cell_velocity[c].len() {
                return Err(Error::Assembly(alloc::format!("operators of cell {c} do not match the DoF map")));
            }
        }
        let scales = ops.iter().map(|o| CellScale { h_t: o.diameter, h_star_f: o.min_face }).collect();
        Ok(Self { k, dofs, ops, scales })
    }

    pub fn n_cells(&self) -> usize {
        self.ops.len()
    }

    pub fn zero_state(&self) -> DiscreteState {
        DiscreteState {
            velocity: vec![0.0; self.dofs.n_velocity],
            pressure: vec![0.0; self.dofs.n_pressure],
            multiplier: 0.0,
        }
    }

    /// Writes boundary values `g` into every Dirichlet DoF of `state`.
    pub fn apply_dirichlet<G: Fn(Point2) -> [f64; 2]>(&self, state: &mut DiscreteState, g: G) -> Result<()> {
        for (i, fixed) in self.dofs.dirichlet.iter().enumerate() {
            if *fixed {
                let (p, c) = self.dofs.sites[i]
                    .ok_or_else(|| Error::Configuration(alloc::format!("Dirichlet DoF {i} has no site")))?;
                let v = g(p)[c];
                if !v.is_finite() {
                    return Err(Error::Configuration(alloc::format!(
                        "boundary value at ({}, {}) is not finite",
                        p.x,
                        p.y
                    )));
                }
                state.velocity[i] = v;
            }
        }
        Ok(())
    }

    /// Global velocity DoFs of a smooth field with gradient `grad[a][b] = ∂_b u_a`.
    pub fn interpolate<U, G>(&self, u: U, grad: G) -> Vec<f64>
    where
        U: Fn(Point2) -> [f64; 2],
        G: Fn(Point2) -> [[f64; 2]; 2],
    {
        let mut out = vec![0.0; self.dofs.n_velocity];
        for (c, o) in self.ops.iter().enumerate() {
            let local = o.interpolate_dofs(&u, &grad);
            for (&g, v) in self.dofs.cell_velocity[c].iter().zip(local) {
                out[g] = v;
            }
        }
        out
    }

    /// Cell-wise L2 projection of a scalar onto `P_{k-1}`.
    pub fn project_pressure<P: Fn(Point2) -> f64>(&self, p: P) -> Vec<f64> {
        let n1 = dim(self.k - 1);
        let mut out = vec![0.0; self.dofs.n_pressure];
        for (c, o) in self.ops.iter().enumerate() {
            let g = DMatrix::from_fn(n1, n1, |i, j| {
                o.integrals.product(crate::basis::MultiIndex::from_index(i), crate::basis::MultiIndex::from_index(j))
            });
            let mut rhs = nalgebra::DVector::zeros(n1);
            let mut m = vec![0.0; o.basis.len()];
            for (&x, &w) in o.rule.points.iter().zip(&o.rule.weights) {
                o.basis.eval_into(x, &mut m);
                let v = p(x);
                for i in 0..n1 {
                    rhs[i] += w * v * m[i];
                }
            }
            let sol = g.lu().solve(&rhs).unwrap_or_else(|| nalgebra::DVector::from_element(n1, f64::NAN));
            let off = self.dofs.pressure_offset(c);
            out[off..off + n1].copy_from_slice(sol.as_slice());
        }
        out
    }

    pub fn local_velocity(&self, state: &DiscreteState, cell: usize) -> Vec<f64> {
        self.dofs.cell_velocity[cell].iter().map(|&g| state.velocity[g]).collect()
    }

    pub fn local_pressure<'a>(&self, state: &'a DiscreteState, cell: usize) -> &'a [f64] {
        let off = self.dofs.pressure_offset(cell);
        &state.pressure[off..off + dim(self.k - 1)]
    }

    /// Residual and Jacobian of the velocity equations on one cell, without the
    /// pressure coupling.
    pub fn local_contribution(
        &self,
        cell: usize,
        u: &[f64],
        physics: &Physics,
        forcing: Option<Forcing<'_>>,
        with_jacobian: bool,
    ) -> LocalContribution {
        let o = &self.ops[cell];
        let ndof = o.ndof();
        let mut r = vec![0.0; ndof];
        let mut jac = with_jacobian.then(|| DMatrix::zeros(ndof, ndof));

        // ν (K + S)
        for i in 0..ndof {
            let mut s = 0.0;
            for j in 0..ndof {
                let a = physics.nu * (o.stiffness[(i, j)] + o.stab[(i, j)]);
                s += a * u[j];
                if let Some(jm) = jac.as_mut() {
                    jm[(i, j)] += a;
                }
            }
            r[i] += s;
        }

        let nonlinear = physics.convection || physics.smagorinsky.is_some();
        if !nonlinear && forcing.is_none() {
            return LocalContribution { residual: r, jacobian: jac };
        }
        let scale = self.scales[cell];
        let smag = physics.smagorinsky.map(|s| s.factor(scale));
        let mut t = PointTables::new(ndof);
        let mut m = vec![0.0; o.basis.len()];
        let mut coef_i = vec![0.0; ndof];
        let mut coef_j = vec![0.0; ndof];
        for (&x, &w) in o.rule.points.iter().zip(&o.rule.weights) {
            o.basis.eval_into(x, &mut m);
            t.fill(o, &m, smag.is_some());
            let v0 = |a: usize| &t.v0[a * ndof..(a + 1) * ndof];
            let g0 = |a: usize| &t.g0[a * ndof..(a + 1) * ndof];
            let gn = |a: usize| &t.gn[a * ndof..(a + 1) * ndof];
            let uw = [dot(v0(0), u), dot(v0(1), u)];
            let ug = [dot(g0(0), u), dot(g0(1), u), dot(g0(2), u), dot(g0(3), u)];

            if let Some(f) = forcing {
                let fv = f(scale, x);
                for i in 0..ndof {
                    r[i] -= w * (fv[0] * t.v0[i] + fv[1] * t.v0[ndof + i]);
                }
            }

            if physics.convection {
                // (Π0∇u Π0u) · Π0v
                let cu = [ug[0] * uw[0] + ug[1] * uw[1], ug[2] * uw[0] + ug[3] * uw[1]];
                for i in 0..ndof {
                    r[i] += w * (cu[0] * t.v0[i] + cu[1] * t.v0[ndof + i]);
                }
                if let Some(jm) = jac.as_mut() {
                    for j in 0..ndof {
                        let (w0, w1) = (t.v0[j], t.v0[ndof + j]);
                        let d0 = t.g0[j] * uw[0] + t.g0[ndof + j] * uw[1] + ug[0] * w0 + ug[1] * w1;
                        let d1 = t.g0[2 * ndof + j] * uw[0] + t.g0[3 * ndof + j] * uw[1] + ug[2] * w0 + ug[3] * w1;
                        if d0 == 0.0 && d1 == 0.0 {
                            continue;
                        }
                        for i in 0..ndof {
                            jm[(i, j)] += w * (d0 * t.v0[i] + d1 * t.v0[ndof + i]);
                        }
                    }
                }
            }

            if let Some(factor) = smag {
                let norm = libm::sqrt(ug.iter().map(|g| g * g).sum());
                let nu_s = factor * norm;
                let un = [dot(gn(0), u), dot(gn(1), u), dot(gn(2), u), dot(gn(3), u)];
                for i in 0..ndof {
                    coef_i[i] = (0..4).map(|a| un[a] * t.gn[a * ndof + i]).sum();
                    r[i] += w * nu_s * coef_i[i];
                }
                if let Some(jm) = jac.as_mut() {
                    for j in 0..ndof {
                        for i in 0..ndof {
                            let s: f64 = (0..4).map(|a| t.gn[a * ndof + i] * t.gn[a * ndof + j]).sum();
                            jm[(i, j)] += w * nu_s * s;
                        }
                    }
                    if norm >= EDDY_GRADIENT_FLOOR {
                        for j in 0..ndof {
                            coef_j[j] = (0..4).map(|a| ug[a] * t.g0[a * ndof + j]).sum::<f64>() / norm;
                        }
                        for j in 0..ndof {
                            let cj = w * factor * coef_j[j];
                            if cj == 0.0 {
                                continue;
                            }
                            for i in 0..ndof {
                                jm[(i, j)] += cj * coef_i[i];
                            }
                        }
                    }
                }
            }
        }
        LocalContribution { residual: r, jacobian: jac }
    }

    /// Adds the pressure coupling and the mean constraint and scatters local
    /// contributions (given in cell order) into the global system.
    pub fn scatter(&self, state: &DiscreteState, locals: &[LocalContribution]) -> Result<SparseSystem> {
        if locals.len() != self.n_cells() {
            return Err(Error::Assembly(alloc::format!("{} local blocks for {} cells", locals.len(), self.n_cells())));
        }
        let d = &self.dofs;
        let n = d.n_unknowns();
        let nf = d.n_free;
        let lam = d.multiplier_row();
        let n1 = dim(self.k - 1);
        let mut res = vec![0.0; n];
        let with_jac = locals.iter().any(|l| l.jacobian.is_some());
        let mut trip = Vec::new();
        for (c, loc) in locals.iter().enumerate() {
            let o = &self.ops[c];
            let map = &d.cell_velocity[c];
            let p = self.local_pressure(state, c);
            let poff = d.pressure_offset(c);
            for (i, &g) in map.iter().enumerate() {
                let fi = d.free_index[g];
                if fi == FIXED {
                    continue;
                }
                let bt: f64 = (0..n1).map(|m| o.div[(m, i)] * p[m]).sum();
                res[fi] += loc.residual[i] + bt;
                if let Some(jm) = &loc.jacobian {
                    for (j, &gj) in map.iter().enumerate() {
                        let fj = d.free_index[gj];
                        if fj != FIXED && jm[(i, j)] != 0.0 {
                            trip.push((fi, fj, jm[(i, j)]));
                        }
                    }
                }
                if with_jac {
                    for m in 0..n1 {
                        let b = o.div[(m, i)];
                        if b != 0.0 {
                            trip.push((fi, nf + poff + m, b));
                            trip.push((nf + poff + m, fi, b));
                        }
                    }
                }
            }
            for m in 0..n1 {
                let bu: f64 = (0..map.len()).map(|i| o.div[(m, i)] * state.velocity[map[i]]).sum();
                res[nf + poff + m] += bu + state.multiplier * o.pressure_mean[m];
                res[lam] += o.pressure_mean[m] * p[m];
                if with_jac {
                    trip.push((nf + poff + m, lam, o.pressure_mean[m]));
                    trip.push((lam, nf + poff + m, o.pressure_mean[m]));
                }
            }
        }
        Ok(SparseSystem { n, residual: res, triplets: compress_triplets(trip) })
    }

    /// Serial assembly of residual and (optionally) Jacobian.
    pub fn assemble(
        &self,
        state: &DiscreteState,
        physics: &Physics,
        forcing: Option<Forcing<'_>>,
        with_jacobian: bool,
    ) -> Result<SparseSystem> {
        let locals: Vec<LocalContribution> = (0..self.n_cells())
            .map(|c| self.local_contribution(c, &self.local_velocity(state, c), physics, forcing, with_jacobian))
            .collect();
        self.scatter(state, &locals)
    }

    /// Adds a Newton update `delta` (unknown-vector layout) to `state`.
    pub fn update(&self, state: &mut DiscreteState, delta: &[f64], step: f64) {
        let d = &self.dofs;
        for (g, &fi) in d.free_index.iter().enumerate() {
            if fi != FIXED {
                state.velocity[g] += step * delta[fi];
            }
        }
        for (i, p) in state.pressure.iter_mut().enumerate() {
            *p += step * delta[d.n_free + i];
        }
        state.multiplier += step * delta[d.multiplier_row()];
    }

    /// Velocity stiffness `Σ_T (K_T + S_T)` and divergence `Σ_T B_T` over the
    /// full velocity numbering, as compressed triplets.
    pub fn stokes_operator(&self) -> (Vec<(usize, usize, f64)>, Vec<(usize, usize, f64)>) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (c, o) in self.ops.iter().enumerate() {
            let map = &self.dofs.cell_velocity[c];
            let poff = self.dofs.pressure_offset(c);
            for (i, &gi) in map.iter().enumerate() {
                for (j, &gj) in map.iter().enumerate() {
                    a.push((gi, gj, o.stiffness[(i, j)] + o.stab[(i, j)]));
                }
                for m in 0..o.n_pressure() {
                    b.push((poff + m, gi, o.div[(m, i)]));
                }
            }
        }
        (compress_triplets(a), compress_triplets(b))
    }

    /// `Σ_T (f, Π0 φ_ℓ)_T` over the full velocity numbering.
    pub fn load_vector(&self, forcing: Forcing<'_>) -> Vec<f64> {
        let mut out = vec![0.0; self.dofs.n_velocity];
        let phys = Physics::stokes(0.0);
        for c in 0..self.n_cells() {
            let u = vec![0.0; self.ops[c].ndof()];
            let loc = self.local_contribution(c, &u, &phys, Some(forcing), false);
            for (&g, r) in self.dofs.cell_velocity[c].iter().zip(loc.residual) {
                out[g] -= r;
            }
        }
        out
    }

    /// Cell average of `ν_S = C_S^2 s_T^2 |Π0∇ w|_F`.
    pub fn eddy_viscosity(&self, state: &DiscreteState, smag: &Smagorinsky) -> Vec<f64> {
        (0..self.n_cells())
            .map(|c| {
                let o = &self.ops[c];
                let g = o.apply(&o.pi_zero_grad, &self.local_velocity(state, c));
                let factor = smag.factor(self.scales[c]);
                let mut s = 0.0;
                for (&x, &w) in o.rule.points.iter().zip(&o.rule.weights) {
                    let t = o.eval_tensor(&g, x);
                    let n = libm::sqrt(t[0][0] * t[0][0] + t[0][1] * t[0][1] + t[1][0] * t[1][0] + t[1][1] * t[1][1]);
                    s += w * factor * n;
                }
                s / o.area
            })
            .collect()
    }

    /// `Σ_T (p_h, 1)_T`.
    pub fn pressure_mean(&self, state: &DiscreteState) -> f64 {
        (0..self.n_cells()).map(|c| dot(&self.ops[c].pressure_mean, self.local_pressure(state, c))).sum()
    }

    /// Euclidean norm of the residual of `state`.
    pub fn residual_norm(&self, state: &DiscreteState, physics: &Physics, forcing: Option<Forcing<'_>>) -> Result<f64> {
        let sys = self.assemble(state, physics, forcing, false)?;
        Ok(libm::sqrt(sys.residual.iter().map(|r| r * r).sum()))
    }
}
