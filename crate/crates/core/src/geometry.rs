use core::ops::{Add, Mul, Neg, Sub};

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    /// `(y, -x)`, the rotation used for the perp component of vector polynomials.
    pub fn perp(self) -> Self {
        Self::new(self.y, -self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: Self, t: f64) -> Self {
        self + (other - self) * t
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Signed area of a closed polygon (positive when counterclockwise).
pub fn signed_area(loop_: &[Point2]) -> f64 {
    let n = loop_.len();
    let mut twice = 0.0;
    for i in 0..n {
        twice += loop_[i].cross(loop_[(i + 1) % n]);
    }
    0.5 * twice
}

/// Area-weighted centroid of a simple polygon.
pub fn centroid(loop_: &[Point2]) -> Point2 {
    let n = loop_.len();
    // shift to the first vertex to limit cancellation
    let o = loop_[0];
    let (mut cx, mut cy, mut twice) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = loop_[i] - o;
        let q = loop_[(i + 1) % n] - o;
        let c = p.cross(q);
        twice += c;
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    o + Point2::new(cx, cy) * (1.0 / (3.0 * twice))
}

/// Largest pairwise vertex distance.
pub fn diameter(loop_: &[Point2]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, &p) in loop_.iter().enumerate() {
        for &q in &loop_[i + 1..] {
            d = d.max(p.distance(q));
        }
    }
    d
}

/// True when every turn is a left turn or straight (collinear vertices such as
/// hanging nodes are allowed).
pub fn is_convex(loop_: &[Point2]) -> bool {
    let n = loop_.len();
    if n < 3 {
        return false;
    }
    let scale = diameter(loop_);
    let tol = 1e-12 * scale * scale;
    (0..n).all(|i| {
        let a = loop_[i];
        let b = loop_[(i + 1) % n];
        let c = loop_[(i + 2) % n];
        (b - a).cross(c - b) >= -tol
    })
}

/// Point-in-convex-polygon test with a relative tolerance; boundary points count as inside.
pub fn contains_convex(loop_: &[Point2], p: Point2, tol: f64) -> bool {
    let n = loop_.len();
    (0..n).all(|i| {
        let a = loop_[i];
        let b = loop_[(i + 1) % n];
        let e = b - a;
        e.cross(p - a) >= -tol * e.norm()
    })
}
