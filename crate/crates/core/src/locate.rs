//! Point location and evaluation of `Π0 u_h` at arbitrary points.

use alloc::vec;
use alloc::vec::Vec;

use crate::assembly::{DiscreteState, Discretization};
use crate::geometry;
use crate::mesh::PolygonalMesh;
use crate::{Error, Point2, Result};

/// Bucket grid over cell bounding boxes. Lookups return the lowest-index cell
/// containing the point.
#[derive(Debug, Clone)]
pub struct CellLocator {
    min: Point2,
    cell_size: Point2,
    n: usize,
    buckets: Vec<Vec<usize>>,
    loops: Vec<Vec<Point2>>,
}

impl CellLocator {
    pub fn new(mesh: &PolygonalMesh) -> Self {
        let loops: Vec<Vec<Point2>> = (0..mesh.cells.len()).map(|c| mesh.cell_points(c)).collect();
        let (mut lo, mut hi) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in &mesh.vertices {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let n = (libm::sqrt(loops.len() as f64) as usize).max(1);
        let size = Point2::new((hi.x - lo.x).max(f64::MIN_POSITIVE) / n as f64, (hi.y - lo.y).max(f64::MIN_POSITIVE) / n as f64);
        let mut me = Self { min: lo, cell_size: size, n, buckets: vec![Vec::new(); n * n], loops };
        for c in 0..me.loops.len() {
            let (mut a, mut b) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
            for p in &me.loops[c] {
                a = Point2::new(a.x.min(p.x), a.y.min(p.y));
                b = Point2::new(b.x.max(p.x), b.y.max(p.y));
            }
            let (i0, j0) = me.bucket(a);
            let (i1, j1) = me.bucket(b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    me.buckets[j * n + i].push(c);
                }
            }
        }
        me
    }

    fn bucket(&self, p: Point2) -> (usize, usize) {
        let f = |v: f64, lo: f64, s: f64| {
            let i = libm::floor((v - lo) / s);
            if i < 0.0 {
                0
            } else {
                (i as usize).min(self.n - 1)
            }
        };
        (f(p.x, self.min.x, self.cell_size.x), f(p.y, self.min.y, self.cell_size.y))
    }

    /// Lowest-index cell containing `p` (boundary within `1e-12` counts).
    pub fn locate(&self, p: Point2) -> Option<usize> {
        let (i, j) = self.bucket(p);
        // neighbouring buckets cover points sitting exactly on bucket edges
        let mut best: Option<usize> = None;
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii < 0 || jj < 0 || ii >= self.n as i64 || jj >= self.n as i64 {
                    continue;
                }
                for &c in &self.buckets[jj as usize * self.n + ii as usize] {
                    if best.is_some_and(|b| b <= c) {
                        continue;
                    }
                    if geometry::contains_convex(&self.loops[c], p, 1e-12) {
                        best = Some(c);
                    }
                }
            }
        }
        best
    }
}

/// `Π0 u_h(p)` on the lowest-index cell containing `p`.
pub fn evaluate_velocity(
    disc: &Discretization,
    locator: &CellLocator,
    state: &DiscreteState,
    p: Point2,
) -> Result<[f64; 2]> {
    let c = locator
        .locate(p)
        .ok_or_else(|| Error::InvalidArgument(alloc::format!("point ({}, {}) is outside the mesh", p.x, p.y)))?;
    let o = &disc.ops[c];
    let coeffs = o.apply(&o.pi_zero, &disc.local_velocity(state, c));
    Ok(o.eval_vector(&coeffs, p))
}

/// `u_x(0.5, y)` for every `y` in `ys` and `u_y(x, 0.5)` for every `x` in `xs`.
pub fn midline_profiles(
    disc: &Discretization,
    mesh: &PolygonalMesh,
    state: &DiscreteState,
    ys: &[f64],
    xs: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let loc = CellLocator::new(mesh);
    let mut ux = Vec::with_capacity(ys.len());
    for &y in ys {
        ux.push(evaluate_velocity(disc, &loc, state, Point2::new(0.5, y))?[0]);
    }
    let mut uy = Vec::with_capacity(xs.len());
    for &x in xs {
        uy.push(evaluate_velocity(disc, &loc, state, Point2::new(x, 0.5))?[1]);
    }
    Ok((ux, uy))
}
