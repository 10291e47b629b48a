//! Polygonal meshes of the unit square: uniform squares (USM), tanh-graded
//! rectangles (ARM) and isotropic quadtree meshes with hanging nodes (IMH).
//!
//! A hanging node is an ordinary vertex of the coarse cell's loop, splitting a
//! straight side into two collinear faces. No constraint equations exist.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{self, Point2};
use crate::{Error, Result};

/// Which side of the unit square a boundary face sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryMarker {
    Interior,
    Bottom,
    Right,
    Top,
    Left,
}

impl BoundaryMarker {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Interior => "interior",
            Self::Bottom => "bottom",
            Self::Right => "right",
            Self::Top => "top",
            Self::Left => "left",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "interior" => Self::Interior,
            "bottom" => Self::Bottom,
            "right" => Self::Right,
            "top" => Self::Top,
            "left" => Self::Left,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub vertices: [usize; 2],
    /// First neighbor always exists; the second is `None` on the boundary.
    pub cells: (usize, Option<usize>),
    pub marker: BoundaryMarker,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.cells.1.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Counterclockwise vertex loop.
    pub vertices: Vec<usize>,
    /// `faces[i]` joins `vertices[i]` and `vertices[i + 1]`.
    pub faces: Vec<usize>,
    pub diameter: f64,
    pub area: f64,
    pub barycenter: Point2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalMesh {
    pub vertices: Vec<Point2>,
    pub faces: Vec<Face>,
    pub cells: Vec<Cell>,
    /// Largest cell diameter.
    pub h: f64,
}

/// Mesh family selector used by the benchmark drivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    Usm,
    Arm,
    Imh,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshFamily {
    pub kind: MeshKind,
    /// Segments per side (the base grid for IMH).
    pub n: usize,
    pub imh_levels: usize,
    pub imh_delta0: f64,
}

impl MeshFamily {
    pub const DEFAULT_DELTA0: f64 = 0.175;

    pub fn usm(n: usize) -> Self {
        Self { kind: MeshKind::Usm, n, imh_levels: 1, imh_delta0: Self::DEFAULT_DELTA0 }
    }

    pub fn arm(n: usize) -> Self {
        Self { kind: MeshKind::Arm, n, imh_levels: 1, imh_delta0: Self::DEFAULT_DELTA0 }
    }

    pub fn imh(n: usize) -> Self {
        Self { kind: MeshKind::Imh, n, imh_levels: 1, imh_delta0: Self::DEFAULT_DELTA0 }
    }

    pub fn build(&self) -> Result<PolygonalMesh> {
        match self.kind {
            MeshKind::Usm => build_uniform_square(self.n),
            MeshKind::Arm => build_anisotropic_tanh(self.n),
            MeshKind::Imh => build_imh(self.n, self.imh_levels, self.imh_delta0),
        }
    }
}

fn face_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Marker of a boundary segment of the unit square, from its coordinates.
fn unit_square_marker(a: Point2, b: Point2) -> Option<BoundaryMarker> {
    const TOL: f64 = 1e-14;
    if a.y.abs() <= TOL && b.y.abs() <= TOL {
        Some(BoundaryMarker::Bottom)
    } else if (a.x - 1.0).abs() <= TOL && (b.x - 1.0).abs() <= TOL {
        Some(BoundaryMarker::Right)
    } else if (a.y - 1.0).abs() <= TOL && (b.y - 1.0).abs() <= TOL {
        Some(BoundaryMarker::Top)
    } else if a.x.abs() <= TOL && b.x.abs() <= TOL {
        Some(BoundaryMarker::Left)
    } else {
        None
    }
}

impl PolygonalMesh {
    /// Builds a mesh of the unit square from vertex loops, deriving faces,
    /// adjacency and boundary markers. Clockwise loops are reversed.
    pub fn from_loops(vertices: Vec<Point2>, loops: Vec<Vec<usize>>) -> Result<Self> {
        Self::build(vertices, loops, None)
    }

    /// Same as [`PolygonalMesh::from_loops`] but boundary markers come from
    /// `markers`, keyed by the sorted vertex pair of each boundary face.
    pub fn from_loops_with_markers(
        vertices: Vec<Point2>,
        loops: Vec<Vec<usize>>,
        markers: &BTreeMap<(usize, usize), BoundaryMarker>,
    ) -> Result<Self> {
        Self::build(vertices, loops, Some(markers))
    }

    fn build(
        vertices: Vec<Point2>,
        mut loops: Vec<Vec<usize>>,
        markers: Option<&BTreeMap<(usize, usize), BoundaryMarker>>,
    ) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::MeshInvalid(format!("vertex {i} has non-finite coordinates")));
        }
        let mut faces: Vec<Face> = Vec::new();
        let mut face_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut cells = Vec::with_capacity(loops.len());
        for (c, lp) in loops.iter_mut().enumerate() {
            if lp.len() < 3 {
                return Err(Error::MeshInvalid(format!("cell {c} has fewer than 3 vertices")));
            }
            if let Some(&v) = lp.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::MeshInvalid(format!("cell {c} references missing vertex {v}")));
            }
            let pts: Vec<Point2> = lp.iter().map(|&v| vertices[v]).collect();
            if geometry::signed_area(&pts) < 0.0 {
                lp.reverse();
            }
            let n = lp.len();
            let mut cell_faces = Vec::with_capacity(n);
            for i in 0..n {
                let (a, b) = (lp[i], lp[(i + 1) % n]);
                if a == b {
                    return Err(Error::MeshInvalid(format!("cell {c} has a repeated vertex {a}")));
                }
                let key = face_key(a, b);
                let f = match face_of.get(&key) {
                    Some(&f) => {
                        let face = &mut faces[f];
                        if face.cells.1.is_some() || face.cells.0 == c {
                            return Err(Error::MeshInvalid(format!("face {a}-{b} shared by more than two cells")));
                        }
                        face.cells.1 = Some(c);
                        face.marker = BoundaryMarker::Interior;
                        f
                    }
                    None => {
                        faces.push(Face { vertices: [a, b], cells: (c, None), marker: BoundaryMarker::Interior });
                        face_of.insert(key, faces.len() - 1);
                        faces.len() - 1
                    }
                };
                cell_faces.push(f);
            }
            let area = geometry::signed_area(&pts).abs();
            if !(area > 0.0) {
                return Err(Error::MeshInvalid(format!("cell {c} is degenerate (area {area})")));
            }
            let pts: Vec<Point2> = lp.iter().map(|&v| vertices[v]).collect();
            cells.push(Cell {
                vertices: lp.clone(),
                faces: cell_faces,
                diameter: geometry::diameter(&pts),
                area,
                barycenter: geometry::centroid(&pts),
            });
        }
        for face in faces.iter_mut().filter(|f| f.is_boundary()) {
            let [a, b] = face.vertices;
            face.marker = match markers {
                Some(m) => *m.get(&face_key(a, b)).ok_or_else(|| {
                    Error::MeshInvalid(format!("boundary face {a}-{b} has no marker"))
                })?,
                None => unit_square_marker(vertices[a], vertices[b]).ok_or_else(|| {
                    Error::MeshInvalid(format!("boundary face {a}-{b} is not on the unit square boundary"))
                })?,
            };
            if face.marker == BoundaryMarker::Interior {
                return Err(Error::MeshInvalid(format!("boundary face {a}-{b} marked interior")));
            }
        }
        let h = cells.iter().map(|c| c.diameter).fold(0.0, f64::max);
        Ok(Self { vertices, faces, cells, h })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point2> {
        self.cells[c].vertices.iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn face_length(&self, f: usize) -> f64 {
        let [a, b] = self.faces[f].vertices;
        self.vertices[a].distance(self.vertices[b])
    }

    /// Shortest face of a cell (`h*_F`).
    pub fn min_face_length(&self, c: usize) -> f64 {
        self.cells[c].faces.iter().map(|&f| self.face_length(f)).fold(f64::INFINITY, f64::min)
    }

    /// Vertices that sit strictly inside a straight side of some cell.
    pub fn hanging_nodes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for cell in &self.cells {
            let n = cell.vertices.len();
            for i in 0..n {
                let a = self.vertices[cell.vertices[(i + n - 1) % n]];
                let b = self.vertices[cell.vertices[i]];
                let c = self.vertices[cell.vertices[(i + 1) % n]];
                let cross = (b - a).cross(c - b);
                if cross.abs() <= 1e-12 * (b - a).norm() * (c - b).norm() && (b - a).dot(c - b) > 0.0 {
                    out.push(cell.vertices[i]);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Face keys (sorted vertex pair) with their boundary markers.
    pub fn boundary_markers(&self) -> BTreeMap<(usize, usize), BoundaryMarker> {
        self.faces
            .iter()
            .filter(|f| f.is_boundary())
            .map(|f| (face_key(f.vertices[0], f.vertices[1]), f.marker))
            .collect()
    }

    pub fn loops(&self) -> Vec<Vec<usize>> {
        self.cells.iter().map(|c| c.vertices.clone()).collect()
    }
}

/// Area, barycenter and diameter of one cell, recomputed from its vertices.
pub fn cell_geometry(mesh: &PolygonalMesh, cell: usize) -> Result<(f64, Point2, f64)> {
    let c = mesh
        .cells
        .get(cell)
        .ok_or_else(|| Error::InvalidArgument(format!("cell id {cell} out of range")))?;
    let pts: Vec<Point2> = c.vertices.iter().map(|&v| mesh.vertices[v]).collect();
    let area = geometry::signed_area(&pts);
    if !(area > 0.0) {
        return Err(Error::MeshInvalid(format!("cell {cell} has non-positive area {area}")));
    }
    Ok((area, geometry::centroid(&pts), geometry::diameter(&pts)))
}

fn tensor_mesh(xs: &[f64]) -> Result<PolygonalMesh> {
    let n = xs.len() - 1;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point2::new(xs[i], xs[j]));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut loops = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            loops.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolygonalMesh::from_loops(vertices, loops)
}

/// `N x N` uniform squares of side `1/N`.
pub fn build_uniform_square(n: usize) -> Result<PolygonalMesh> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("uniform mesh needs N >= 2, got {n}")));
    }
    let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    tensor_mesh(&xs)
}

/// Boundary-clustering grading `t(ξ) = (1 + tanh(4ξ - 2)/tanh 2) / 2`.
pub fn tanh_grading(xi: f64) -> f64 {
    0.5 * (1.0 + libm::tanh(4.0 * xi - 2.0) / libm::tanh(2.0))
}

/// Tensor-product rectangles with nodes `t(i/N)` on both axes.
pub fn build_anisotropic_tanh(n: usize) -> Result<PolygonalMesh> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("anisotropic mesh needs N >= 2, got {n}")));
    }
    let mut xs: Vec<f64> = (0..=n).map(|i| tanh_grading(i as f64 / n as f64)).collect();
    // pin the ends exactly so boundary markers are exact
    xs[0] = 0.0;
    xs[n] = 1.0;
    tensor_mesh(&xs)
}

/// Quadtree refinement of the uniform `N0 x N0` mesh towards the boundary.
///
/// At level `l = 1..=levels` every square whose barycenter lies closer than
/// `delta0 / 2^l` to the boundary is split into four. Split sides leave hanging
/// nodes on the coarse neighbors, which appear as extra loop vertices.
pub fn build_imh(n0: usize, levels: usize, delta0: f64) -> Result<PolygonalMesh> {
    if n0 < 2 {
        return Err(Error::InvalidArgument(format!("IMH needs N0 >= 2, got {n0}")));
    }
    if levels < 1 {
        return Err(Error::InvalidArgument("IMH needs at least one refinement level".into()));
    }
    let h0 = 1.0 / n0 as f64;
    if !(delta0 >= h0 && delta0 < 0.5 - h0) {
        return Err(Error::InvalidArgument(format!(
            "IMH delta0 = {delta0} outside [1/N0, 0.5 - 1/N0) = [{h0}, {})",
            0.5 - h0
        )));
    }
    if levels > 20 {
        return Err(Error::InvalidArgument(format!("IMH levels = {levels} is unreasonably deep")));
    }
    // integer coordinates on the finest lattice
    let scale = (n0 << levels) as i64;
    let base = 1i64 << levels;
    let mut squares: Vec<(i64, i64, i64)> = Vec::with_capacity(n0 * n0);
    for j in 0..n0 as i64 {
        for i in 0..n0 as i64 {
            squares.push((i * base, j * base, base));
        }
    }
    for l in 1..=levels {
        let delta = delta0 / (1u64 << l) as f64;
        let mut next = Vec::with_capacity(squares.len() * 2);
        for &(ix, iy, s) in &squares {
            let cx = (ix as f64 + s as f64 / 2.0) / scale as f64;
            let cy = (iy as f64 + s as f64 / 2.0) / scale as f64;
            let dist = cx.min(1.0 - cx).min(cy).min(1.0 - cy);
            if dist < delta && s > 1 {
                let t = s / 2;
                next.extend_from_slice(&[(ix, iy, t), (ix + t, iy, t), (ix, iy + t, t), (ix + t, iy + t, t)]);
            } else {
                next.push((ix, iy, s));
            }
        }
        squares = next;
    }
    let mut index: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    let mut vertices = Vec::new();
    let mut vertex = |x: i64, y: i64, vertices: &mut Vec<Point2>| -> usize {
        *index.entry((x, y)).or_insert_with(|| {
            vertices.push(Point2::new(x as f64 / scale as f64, y as f64 / scale as f64));
            vertices.len() - 1
        })
    };
    // register corners in a stable order first
    for &(ix, iy, s) in &squares {
        for (x, y) in [(ix, iy), (ix + s, iy), (ix + s, iy + s), (ix, iy + s)] {
            vertex(x, y, &mut vertices);
        }
    }
    let lookup = |x: i64, y: i64| index.get(&(x, y)).copied();
    let mut loops = Vec::with_capacity(squares.len());
    for &(ix, iy, s) in &squares {
        let mut lp = Vec::with_capacity(8);
        let sides = [((ix, iy), (1, 0)), ((ix + s, iy), (0, 1)), ((ix + s, iy + s), (-1, 0)), ((ix, iy + s), (0, -1))];
        for ((x0, y0), (dx, dy)) in sides {
            for t in 0..s {
                if let Some(v) = lookup(x0 + dx * t, y0 + dy * t) {
                    lp.push(v);
                }
            }
        }
        loops.push(lp);
    }
    PolygonalMesh::from_loops(vertices, loops)
}

/// Defects found by [`validate_mesh`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    /// Cells that are not convex (convexity stands in for star-shapedness).
    pub nonconvex_cells: Vec<usize>,
    /// `(cell, face)` pairs with `h_F < rho h_T`.
    pub short_faces: Vec<(usize, usize)>,
    /// Cells with non-positive signed area.
    pub orientation_defects: Vec<usize>,
    /// Faces whose marker disagrees with their neighbor count.
    pub adjacency_defects: Vec<usize>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.nonconvex_cells.is_empty()
            && self.short_faces.is_empty()
            && self.orientation_defects.is_empty()
            && self.adjacency_defects.is_empty()
    }
}

/// Checks the star-shaped (via convexity) and shape-regularity assumptions.
pub fn validate_mesh(mesh: &PolygonalMesh, rho: f64) -> Result<ValidationReport> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("rho must lie in (0, 1), got {rho}")));
    }
    let mut report = ValidationReport::default();
    for (c, cell) in mesh.cells.iter().enumerate() {
        let pts = mesh.cell_points(c);
        if geometry::signed_area(&pts) <= 0.0 {
            report.orientation_defects.push(c);
        }
        if !geometry::is_convex(&pts) {
            report.nonconvex_cells.push(c);
        }
        for &f in &cell.faces {
            if mesh.face_length(f) < rho * cell.diameter {
                report.short_faces.push((c, f));
            }
        }
    }
    for (f, face) in mesh.faces.iter().enumerate() {
        let boundary_marked = face.marker != BoundaryMarker::Interior;
        if boundary_marked != face.is_boundary() {
            report.adjacency_defects.push(f);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_counts() {
        let m = build_uniform_square(31).unwrap();
        assert_eq!(m.cells.len(), 961);
        assert_eq!(m.vertices.len(), 1024);
        assert_relative_eq!(m.h, libm::sqrt(2.0) / 31.0, epsilon = 1e-15);
        let m = build_uniform_square(2).unwrap();
        assert_eq!((m.cells.len(), m.vertices.len(), m.faces.len()), (4, 9, 12));
        assert!(matches!(build_uniform_square(1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn grading_values() {
        assert_eq!(tanh_grading(0.0), 0.0);
        assert_relative_eq!(tanh_grading(1.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(tanh_grading(0.5), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn hanging_node_square_geometry_matches_plain_square() {
        let verts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.5, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        let pent = PolygonalMesh::from_loops(verts.clone(), vec![vec![0, 1, 2, 3, 4]]).unwrap();
        let quad = PolygonalMesh::from_loops(verts, vec![vec![0, 2, 3, 4]]).unwrap();
        let a = cell_geometry(&pent, 0).unwrap();
        let b = cell_geometry(&quad, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, (1.0, Point2::new(0.5, 0.5), libm::sqrt(2.0)));
        assert_eq!(pent.hanging_nodes(), vec![1]);
    }

    #[test]
    fn small_square_geometry() {
        let verts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.5, 0.0),
            Point2::new(0.5, 0.5),
            Point2::new(0.0, 0.5),
        ];
        // clockwise input is normalized
        let m = PolygonalMesh::from_loops_with_markers(
            verts,
            vec![vec![0, 3, 2, 1]],
            &[((0, 1), BoundaryMarker::Bottom), ((1, 2), BoundaryMarker::Right), ((2, 3), BoundaryMarker::Top), ((0, 3), BoundaryMarker::Left)]
                .into_iter()
                .collect(),
        )
        .unwrap();
        let (a, c, d) = cell_geometry(&m, 0).unwrap();
        assert_relative_eq!(a, 0.25);
        assert_relative_eq!(c.x, 0.25);
        assert_relative_eq!(c.y, 0.25);
        assert_relative_eq!(d, 0.5 * libm::sqrt(2.0));
        assert!(cell_geometry(&m, 3).is_err());
    }

    #[test]
    fn imh_parameter_checks() {
        assert!(build_imh(4, 0, 0.3).is_err());
        assert!(build_imh(4, 1, 0.2).is_err());
        assert!(build_imh(4, 1, 0.25).is_err());
        assert!(build_imh(1, 1, 0.3).is_err());
    }
}
