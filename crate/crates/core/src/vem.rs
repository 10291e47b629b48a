//! Enhanced divergence-free virtual element of order `k >= 2` on a convex polygon.
//!
//! Local DoFs, in order:
//! 1. both velocity components at every vertex and at the `k - 1` interior
//!    Gauss-Lobatto points of every edge (index `2 * node + component`);
//! 2. divergence moments `(div v, m_i)` for `m_i` in `M_{k-1}` without the constant;
//! 3. interior moments `(v, x^⊥ m_j)` for `m_j` in `M_{k-3}`.
//!
//! All polynomial coefficient vectors use the graded-lexicographic scaled
//! monomials of the cell. Vector fields stack components: `c * dim P + α`.
//! Tensor fields (`∂_b v_a`) stack as `(2a + b) * dim P_{k-1} + α`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Dyn, LU};

use crate::basis::{dim, dim_signed, vector_monomial_decompose, Direction, MonomialBasis, MonomialIntegrals, MultiIndex};
use crate::geometry::{self, Point2};
use crate::mesh::PolygonalMesh;
use crate::quadrature::{self, QuadratureRule};
use crate::{Error, Result};

/// Counts and ordering of the local velocity DoFs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofLayout {
    pub k: usize,
    pub n_vertices: usize,
    pub n_edge_points: usize,
    pub n_div_moments: usize,
    pub n_interior_moments: usize,
}

impl DofLayout {
    pub fn new(n_vertices: usize, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Unsupported(alloc::format!("velocity order k = {k}; k >= 2 is required")));
        }
        if n_vertices < 3 {
            return Err(Error::InvalidArgument(alloc::format!("polygon with {n_vertices} vertices")));
        }
        Ok(Self {
            k,
            n_vertices,
            n_edge_points: n_vertices * (k - 1),
            n_div_moments: dim(k - 1) - 1,
            n_interior_moments: dim_signed(k as isize - 3),
        })
    }

    /// Vertices plus interior edge points.
    pub fn n_nodes(&self) -> usize {
        self.n_vertices + self.n_edge_points
    }

    pub fn total(&self) -> usize {
        2 * self.n_nodes() + self.n_div_moments + self.n_interior_moments
    }

    pub fn node_dof(&self, node: usize, component: usize) -> usize {
        2 * node + component
    }

    /// Node id of the `j`-th interior point of edge `edge` (`j < k - 1`).
    pub fn edge_node(&self, edge: usize, j: usize) -> usize {
        self.n_vertices + edge * (self.k - 1) + j
    }

    /// DoF of the moment against `m_i`, `1 <= i < dim P_{k-1}`.
    pub fn div_dof(&self, i: usize) -> usize {
        debug_assert!(i >= 1);
        2 * self.n_nodes() + i - 1
    }

    pub fn interior_dof(&self, j: usize) -> usize {
        2 * self.n_nodes() + self.n_div_moments + j
    }
}

pub fn dof_layout(n_vertices: usize, k: usize) -> Result<DofLayout> {
    DofLayout::new(n_vertices, k)
}

/// Dense local operators of one element.
#[derive(Debug, Clone)]
pub struct ElementOperators {
    pub k: usize,
    pub layout: DofLayout,
    /// Scaled monomials of degree `k` centred at the barycenter with `h = h_T`.
    pub basis: MonomialBasis,
    pub area: f64,
    pub diameter: f64,
    pub min_face: f64,
    /// Cell rule exact to degree `max(2k + 2, 3k - 1)`.
    pub rule: QuadratureRule,
    /// Positions of vertex and edge nodes, by node id.
    pub nodes: Vec<Point2>,
    /// DoFs to `[P_k]^2` coefficients of the H1 projection.
    pub pi_nabla: DMatrix<f64>,
    /// DoFs to `[P_k]^2` coefficients of the L2 projection.
    pub pi_zero: DMatrix<f64>,
    /// DoFs to `[P_{k-1}]^{2x2}` coefficients of the L2 projection of the gradient.
    pub pi_zero_grad: DMatrix<f64>,
    /// DoFs to `[P_{k-1}]^{2x2}` coefficients of the gradient of the H1 projection.
    pub grad_pi_nabla: DMatrix<f64>,
    /// `(∇Π∇ φ_j, ∇Π∇ φ_i)_T`.
    pub stiffness: DMatrix<f64>,
    /// dofi-dofi stabilization `(I - D Π∇)^T (I - D Π∇)`.
    pub stab: DMatrix<f64>,
    /// `-(m_i, div φ_j)_T`, pressure basis `M_{k-1}` by velocity DoFs.
    pub div: DMatrix<f64>,
    /// DoFs to `P_{k-1}` coefficients of `div v`.
    pub div_coeffs: DMatrix<f64>,
    /// `∫_T m_i` for the pressure basis.
    pub pressure_mean: Vec<f64>,
    /// `∫_T m_α` for `|α| <= 2k + 2`.
    pub integrals: MonomialIntegrals,
}

struct EdgeQuad {
    weights: Vec<f64>,
    /// Lagrange values of the `k + 1` edge nodes at each Gauss point.
    lagrange: Vec<Vec<f64>>,
    /// Monomial values up to degree `k + 1` at each Gauss point.
    mono: Vec<Vec<f64>>,
    /// Local node ids along the edge, start vertex first.
    nodes: Vec<usize>,
    normal: Point2,
}

fn lagrange_values(nodes: &[f64], s: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            let mut v = 1.0;
            for (j, &sj) in nodes.iter().enumerate() {
                if j != i {
                    v *= (s - sj) / (nodes[i] - sj);
                }
            }
            v
        })
        .collect()
}

/// Row functional `v -> ∫_∂T v · g ds`, with `g` given from the monomial values
/// and outward normal at each boundary Gauss point.
fn boundary_row<G: Fn(&[f64], Point2) -> [f64; 2]>(edges: &[EdgeQuad], ndof: usize, g: G) -> Vec<f64> {
    let mut row = vec![0.0; ndof];
    for e in edges {
        for q in 0..e.weights.len() {
            let gv = g(&e.mono[q], e.normal);
            if gv == [0.0, 0.0] {
                continue;
            }
            let w = e.weights[q];
            for (i, &node) in e.nodes.iter().enumerate() {
                let l = w * e.lagrange[q][i];
                row[2 * node] += l * gv[0];
                row[2 * node + 1] += l * gv[1];
            }
        }
    }
    row
}

fn axpy(dst: &mut [f64], a: f64, src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += a * s;
    }
}

/// LU factors of `S G S` with `S = diag(|G_ii|)^{-1/2}`; the symmetric scaling
/// tames the spread of scaled-monomial magnitudes on anisotropic cells.
struct ScaledLu {
    lu: LU<f64, Dyn, Dyn>,
    scale: Vec<f64>,
}

fn factor(m: DMatrix<f64>, cell: usize, reason: &'static str) -> Result<ScaledLu> {
    let n = m.nrows();
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let d = m[(i, i)].abs();
            if d > 0.0 {
                1.0 / libm::sqrt(d)
            } else {
                1.0
            }
        })
        .collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| scale[i] * m[(i, j)] * scale[j]);
    let lu = scaled.lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..n).map(|i| u[(i, i)].abs()).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max.is_finite() && min > 1e-14 * max) {
        return Err(Error::ElementDegenerate { cell, reason });
    }
    Ok(ScaledLu { lu, scale })
}

fn solve(f: &ScaledLu, rhs: &DMatrix<f64>, cell: usize, reason: &'static str) -> Result<DMatrix<f64>> {
    let b = DMatrix::from_fn(rhs.nrows(), rhs.ncols(), |i, j| f.scale[i] * rhs[(i, j)]);
    let mut x = f.lu.solve(&b).ok_or(Error::ElementDegenerate { cell, reason })?;
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            x[(i, j)] *= f.scale[i];
        }
    }
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::ElementDegenerate { cell, reason })
    }
}

fn rows_to_matrix(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Operators of cell `cell` of `mesh`.
pub fn element_operators(mesh: &PolygonalMesh, cell: usize, k: usize) -> Result<ElementOperators> {
    if cell >= mesh.cells.len() {
        return Err(Error::InvalidArgument(alloc::format!("cell id {cell} out of range")));
    }
    build(&mesh.cell_points(cell), k, cell)
}

impl ElementOperators {
    /// Operators of a standalone counterclockwise convex polygon.
    pub fn new(vertices: &[Point2], k: usize) -> Result<Self> {
        build(vertices, k, 0)
    }

    pub fn ndof(&self) -> usize {
        self.layout.total()
    }

    pub fn n_pressure(&self) -> usize {
        dim(self.k - 1)
    }

    /// `m * dofs` as a plain vector.
    pub fn apply(&self, m: &DMatrix<f64>, dofs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(m.ncols(), dofs.len());
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * dofs[j]).sum()).collect()
    }

    /// Evaluates a `[P_k]^2` coefficient vector at `p`.
    pub fn eval_vector(&self, coeffs: &[f64], p: Point2) -> [f64; 2] {
        let nk = dim(self.k);
        let m = self.basis.eval(p);
        let dot = |c: &[f64]| c.iter().zip(&m).map(|(a, b)| a * b).sum::<f64>();
        [dot(&coeffs[..nk]), dot(&coeffs[nk..2 * nk])]
    }

    /// Evaluates a `[P_{k-1}]^{2x2}` coefficient vector at `p`; `out[a][b] = ∂_b v_a`.
    pub fn eval_tensor(&self, coeffs: &[f64], p: Point2) -> [[f64; 2]; 2] {
        let n1 = dim(self.k - 1);
        let m = self.basis.eval(p);
        let mut t = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let off = (2 * a + b) * n1;
                t[a][b] = (0..n1).map(|i| coeffs[off + i] * m[i]).sum();
            }
        }
        t
    }

    /// Evaluates a `P_{k-1}` scalar coefficient vector at `p`.
    pub fn eval_scalar_km1(&self, coeffs: &[f64], p: Point2) -> f64 {
        let m = self.basis.eval(p);
        coeffs.iter().zip(&m).map(|(a, b)| a * b).sum()
    }

    /// DoFs of a smooth field `u` with gradient `grad[a][b] = ∂_b u_a`.
    pub fn interpolate_dofs<U, G>(&self, u: U, grad: G) -> Vec<f64>
    where
        U: Fn(Point2) -> [f64; 2],
        G: Fn(Point2) -> [[f64; 2]; 2],
    {
        let l = &self.layout;
        let mut dofs = vec![0.0; l.total()];
        for (b, &x) in self.nodes.iter().enumerate() {
            let v = u(x);
            dofs[2 * b] = v[0];
            dofs[2 * b + 1] = v[1];
        }
        let mut m = vec![0.0; self.basis.len()];
        for (&x, &w) in self.rule.points.iter().zip(&self.rule.weights) {
            self.basis.eval_into(x, &mut m);
            let g = grad(x);
            let div = g[0][0] + g[1][1];
            for i in 1..dim(self.k - 1) {
                dofs[l.div_dof(i)] += w * div * m[i];
            }
            if l.n_interior_moments > 0 {
                let v = u(x);
                // x^⊥ = (m_{01}, -m_{10})
                let vp = v[0] * m[2] - v[1] * m[1];
                for j in 0..l.n_interior_moments {
                    dofs[l.interior_dof(j)] += w * vp * m[j];
                }
            }
        }
        dofs
    }

    /// `‖div v‖_{L2(T)}` of the virtual function with DoFs `dofs`.
    pub fn div_norm(&self, dofs: &[f64]) -> f64 {
        let d = self.apply(&self.div_coeffs, dofs);
        let n1 = d.len();
        let mut s = 0.0;
        for i in 0..n1 {
            for j in 0..n1 {
                s += d[i] * d[j] * self.integrals.product(MultiIndex::from_index(i), MultiIndex::from_index(j));
            }
        }
        libm::sqrt(s.max(0.0))
    }
}

fn build(pts: &[Point2], k: usize, cell: usize) -> Result<ElementOperators> {
    let layout = DofLayout::new(pts.len(), k)?;
    let nv = pts.len();
    let area = geometry::signed_area(pts);
    if !(area > 0.0) {
        return Err(Error::ElementDegenerate { cell, reason: "non-positive signed area" });
    }
    let h = geometry::diameter(pts);
    let center = geometry::centroid(pts);
    let order = (2 * k + 2).max(3 * k - 1);
    let rule = quadrature::polygon_quadrature(pts, order)
        .map_err(|_| Error::ElementDegenerate { cell, reason: "cell is not convex" })?;
    let table = MonomialBasis::new(center, h, 2 * k + 2);
    let ints = MonomialIntegrals::from_rule(&table, &rule);
    let integ = |a: MultiIndex| ints.get(a);
    let mi = MultiIndex::from_index;

    let nk = dim(k);
    let nk1 = dim(k - 1);
    let ndof = layout.total();
    let edge_basis = MonomialBasis::new(center, h, k + 1);

    // nodes and edge rules
    let (gl, _) = quadrature::gauss_lobatto(k + 1);
    let (gx, gw) = quadrature::gauss_legendre(k + 2);
    let lag: Vec<Vec<f64>> = gx.iter().map(|&s| lagrange_values(&gl, s)).collect();
    let mut nodes = vec![Point2::default(); layout.n_nodes()];
    nodes[..nv].copy_from_slice(pts);
    let mut edges = Vec::with_capacity(nv);
    let mut min_face = f64::INFINITY;
    for e in 0..nv {
        let (a, b) = (pts[e], pts[(e + 1) % nv]);
        let len = a.distance(b);
        min_face = min_face.min(len);
        if !(len > 0.0) {
            return Err(Error::ElementDegenerate { cell, reason: "zero-length face" });
        }
        let mut ids = Vec::with_capacity(k + 1);
        ids.push(e);
        for j in 0..k - 1 {
            let id = layout.edge_node(e, j);
            nodes[id] = a.lerp(b, 0.5 * (gl[j + 1] + 1.0));
            ids.push(id);
        }
        ids.push((e + 1) % nv);
        let t = b - a;
        edges.push(EdgeQuad {
            weights: gw.iter().map(|w| 0.5 * w * len).collect(),
            lagrange: lag.clone(),
            mono: gx.iter().map(|&s| edge_basis.eval(a.lerp(b, 0.5 * (s + 1.0)))).collect(),
            nodes: ids,
            normal: Point2::new(t.y / len, -t.x / len),
        });
    }

    // divergence: G1 d = (flux, div DoFs)
    let g1 = DMatrix::from_fn(nk1, nk1, |i, j| integ(mi(i).add(mi(j))));
    let g1_lu = factor(g1, cell, "singular P_{k-1} Gram matrix")?;
    let mut div_rhs = DMatrix::zeros(nk1, ndof);
    let flux = boundary_row(&edges, ndof, |_, n| [n.x, n.y]);
    for (j, v) in flux.iter().enumerate() {
        div_rhs[(0, j)] = *v;
    }
    for i in 1..nk1 {
        div_rhs[(i, layout.div_dof(i))] = 1.0;
    }
    let div_coeffs = solve(&g1_lu, &div_rhs, cell, "divergence reconstruction failed")?;
    let div = -div_rhs;

    // (v, ∇m_β) for 1 <= |β| <= k + 1
    let mut grad_mom: Vec<Vec<f64>> = vec![Vec::new(); dim(k + 1)];
    for (bi, slot) in grad_mom.iter_mut().enumerate().skip(1) {
        let mut row = boundary_row(&edges, ndof, |m, n| [m[bi] * n.x, m[bi] * n.y]);
        let beta = mi(bi);
        for j in 0..nk1 {
            let c = integ(mi(j).add(beta));
            for (r, d) in row.iter_mut().zip(div_coeffs.row(j).iter()) {
                *r -= c * d;
            }
        }
        *slot = row;
    }

    // (v, x^⊥ m_γ) for |γ| <= k - 1; low degrees are DoFs, the rest come later
    let mut perp_mom: Vec<Vec<f64>> = vec![Vec::new(); nk1];
    for (j, slot) in perp_mom.iter_mut().enumerate().take(layout.n_interior_moments) {
        let mut row = vec![0.0; ndof];
        row[layout.interior_dof(j)] = 1.0;
        *slot = row;
    }

    let vector_moment = |c: usize, beta: MultiIndex, perp_mom: &[Vec<f64>]| -> Vec<f64> {
        let dir = if c == 0 { Direction::X } else { Direction::Y };
        let dec = vector_monomial_decompose(beta, dir, h);
        let mut row = vec![0.0; ndof];
        axpy(&mut row, dec.grad.0, &grad_mom[dec.grad.1.index()]);
        if let Some((coef, g)) = dec.perp {
            let src = &perp_mom[g.index()];
            debug_assert!(!src.is_empty());
            axpy(&mut row, coef, src);
        }
        row
    };

    // H1 projection
    let h2 = h * h;
    let grad_gram = |a: MultiIndex, b: MultiIndex| -> f64 {
        let mut s = 0.0;
        if a.x > 0 && b.x > 0 {
            s += (a.x * b.x) as f64 * integ(MultiIndex::new(a.x + b.x - 2, a.y + b.y));
        }
        if a.y > 0 && b.y > 0 {
            s += (a.y * b.y) as f64 * integ(MultiIndex::new(a.x + b.x, a.y + b.y - 2));
        }
        s / h2
    };
    let gg = DMatrix::from_fn(nk, nk, |i, j| grad_gram(mi(i), mi(j)));
    let mut boundary_mono = vec![0.0; nk];
    for e in &edges {
        for q in 0..e.weights.len() {
            axpy(&mut boundary_mono, e.weights[q], &e.mono[q][..nk]);
        }
    }
    let mut gmod = gg.clone();
    for j in 0..nk {
        gmod[(0, j)] = boundary_mono[j];
    }
    let gmod_lu = factor(gmod, cell, "singular H1 projection system")?;
    let mut pin = DMatrix::zeros(2 * nk, ndof);
    for c in 0..2 {
        let mut rows = Vec::with_capacity(nk);
        for bi in 0..nk {
            let beta = mi(bi);
            let row = if bi == 0 {
                boundary_row(&edges, ndof, |_, _| if c == 0 { [1.0, 0.0] } else { [0.0, 1.0] })
            } else {
                let mut row = boundary_row(&edges, ndof, |m, n| {
                    let mut g = 0.0;
                    if beta.x > 0 {
                        g += beta.x as f64 * m[MultiIndex::new(beta.x - 1, beta.y).index()] * n.x;
                    }
                    if beta.y > 0 {
                        g += beta.y as f64 * m[MultiIndex::new(beta.x, beta.y - 1).index()] * n.y;
                    }
                    let g = g / h;
                    if c == 0 {
                        [g, 0.0]
                    } else {
                        [0.0, g]
                    }
                });
                if beta.x > 1 {
                    let coef = (beta.x * (beta.x - 1)) as f64 / h2;
                    axpy(&mut row, -coef, &vector_moment(c, MultiIndex::new(beta.x - 2, beta.y), &perp_mom));
                }
                if beta.y > 1 {
                    let coef = (beta.y * (beta.y - 1)) as f64 / h2;
                    axpy(&mut row, -coef, &vector_moment(c, MultiIndex::new(beta.x, beta.y - 2), &perp_mom));
                }
                row
            };
            rows.push(row);
        }
        let sol = solve(&gmod_lu, &rows_to_matrix(&rows, ndof), cell, "H1 projection solve failed")?;
        pin.rows_mut(c * nk, nk).copy_from(&sol);
    }

    // enhancement: (v, x^⊥ m_γ) = (Π∇ v, x^⊥ m_γ) for |γ| in {k-2, k-1}
    for (gi, slot) in perp_mom.iter_mut().enumerate() {
        let gamma = mi(gi);
        if gamma.degree() + 3 <= k {
            continue;
        }
        let mut row = vec![0.0; ndof];
        for a in 0..nk {
            let base = mi(a).add(gamma);
            let cx = integ(base.add(MultiIndex::new(0, 1)));
            let cy = -integ(base.add(MultiIndex::new(1, 0)));
            for j in 0..ndof {
                row[j] += cx * pin[(a, j)] + cy * pin[(nk + a, j)];
            }
        }
        *slot = row;
    }

    // L2 projection
    let g0 = DMatrix::from_fn(nk, nk, |i, j| integ(mi(i).add(mi(j))));
    let g0_lu = factor(g0, cell, "singular P_k Gram matrix")?;
    let mut pi0 = DMatrix::zeros(2 * nk, ndof);
    let mut moments: [Vec<Vec<f64>>; 2] = [Vec::with_capacity(nk), Vec::with_capacity(nk)];
    for (c, mom) in moments.iter_mut().enumerate() {
        for bi in 0..nk {
            mom.push(vector_moment(c, mi(bi), &perp_mom));
        }
        let sol = solve(&g0_lu, &rows_to_matrix(mom, ndof), cell, "L2 projection solve failed")?;
        pi0.rows_mut(c * nk, nk).copy_from(&sol);
    }

    // L2 projection of the gradient
    let mut pi0g = DMatrix::zeros(4 * nk1, ndof);
    for a in 0..2 {
        for b in 0..2 {
            let mut rows = Vec::with_capacity(nk1);
            for ai in 0..nk1 {
                let alpha = mi(ai);
                let mut row = boundary_row(&edges, ndof, |m, n| {
                    let g = m[ai] * if b == 0 { n.x } else { n.y };
                    if a == 0 {
                        [g, 0.0]
                    } else {
                        [0.0, g]
                    }
                });
                let (pow, lower) = if b == 0 {
                    (alpha.x, (alpha.x > 0).then(|| MultiIndex::new(alpha.x - 1, alpha.y)))
                } else {
                    (alpha.y, (alpha.y > 0).then(|| MultiIndex::new(alpha.x, alpha.y - 1)))
                };
                if let Some(lower) = lower {
                    axpy(&mut row, -(pow as f64) / h, &moments[a][lower.index()]);
                }
                rows.push(row);
            }
            let sol = solve(&g1_lu, &rows_to_matrix(&rows, ndof), cell, "gradient projection solve failed")?;
            pi0g.rows_mut((2 * a + b) * nk1, nk1).copy_from(&sol);
        }
    }

    // gradient of the H1 projection in the tensor layout
    let mut gpin = DMatrix::zeros(4 * nk1, ndof);
    for a in 0..2 {
        for bi in 1..nk {
            let beta = mi(bi);
            for b in 0..2 {
                let (pow, lower) = if b == 0 {
                    (beta.x, (beta.x > 0).then(|| MultiIndex::new(beta.x - 1, beta.y)))
                } else {
                    (beta.y, (beta.y > 0).then(|| MultiIndex::new(beta.x, beta.y - 1)))
                };
                if let Some(lower) = lower {
                    let r = (2 * a + b) * nk1 + lower.index();
                    let coef = pow as f64 / h;
                    for j in 0..ndof {
                        gpin[(r, j)] += coef * pin[(a * nk + bi, j)];
                    }
                }
            }
        }
    }

    // DoFs of the polynomial basis
    let mut dmat = DMatrix::zeros(ndof, 2 * nk);
    let kb = MonomialBasis::new(center, h, k);
    for (b, &x) in nodes.iter().enumerate() {
        let m = kb.eval(x);
        for ai in 0..nk {
            dmat[(2 * b, ai)] = m[ai];
            dmat[(2 * b + 1, nk + ai)] = m[ai];
        }
    }
    for ai in 0..nk {
        let alpha = mi(ai);
        for i in 1..nk1 {
            let r = layout.div_dof(i);
            if alpha.x > 0 {
                dmat[(r, ai)] = alpha.x as f64 / h * integ(MultiIndex::new(alpha.x - 1, alpha.y).add(mi(i)));
            }
            if alpha.y > 0 {
                dmat[(r, nk + ai)] = alpha.y as f64 / h * integ(MultiIndex::new(alpha.x, alpha.y - 1).add(mi(i)));
            }
        }
        for j in 0..layout.n_interior_moments {
            let r = layout.interior_dof(j);
            let base = alpha.add(mi(j));
            dmat[(r, ai)] = integ(base.add(MultiIndex::new(0, 1)));
            dmat[(r, nk + ai)] = -integ(base.add(MultiIndex::new(1, 0)));
        }
    }
    let resid = DMatrix::identity(ndof, ndof) - &dmat * &pin;
    let stab = resid.transpose() * &resid;

    let mut gfull = DMatrix::zeros(2 * nk, 2 * nk);
    gfull.view_mut((0, 0), (nk, nk)).copy_from(&gg);
    gfull.view_mut((nk, nk), (nk, nk)).copy_from(&gg);
    let stiffness = pin.transpose() * &gfull * &pin;

    let pressure_mean = (0..nk1).map(|i| integ(mi(i))).collect();
    Ok(ElementOperators {
        k,
        layout,
        basis: kb,
        area,
        diameter: h,
        min_face,
        rule,
        nodes,
        pi_nabla: pin,
        pi_zero: pi0,
        pi_zero_grad: pi0g,
        grad_pi_nabla: gpin,
        stiffness,
        stab,
        div,
        div_coeffs,
        pressure_mean,
        integrals: ints,
    })
}
