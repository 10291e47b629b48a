//! Gauss rules on segments, triangles and convex polygons.
//!
//! Triangles use the collapsed (Duffy) tensor-product Gauss-Legendre rule, so
//! any polynomial degree is reachable and all weights stay positive. Polygons
//! are fan-triangulated from their barycenter.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::geometry::{self, Point2};
use crate::{Error, Result};

/// Points and weights of a quadrature rule on some 2D domain.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate<F: FnMut(Point2) -> f64>(&self, mut f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // endpoint limit P_n'(±1) = ±n(n+1)/2
        let s = if x > 0.0 { 1.0 } else if n % 2 == 0 { -1.0 } else { 1.0 };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (p0 - x * p1) / (1.0 - x * x)
    };
    (p1, dp)
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one point");
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        let mut x = -libm::cos(PI * (i as f64 + 0.75) / (nf + 0.5));
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// `n`-point Gauss-Lobatto rule on `[-1, 1]` (endpoints included), nodes ascending.
///
/// Exact for polynomials of degree `2n - 3`.
pub fn gauss_lobatto(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "gauss_lobatto needs at least two points");
    let m = n - 1; // interior nodes are the roots of P_m'
    let mf = m as f64;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = -libm::cos(PI * i as f64 / mf);
        if i != 0 && i != m {
            for _ in 0..100 {
                let (p, dp) = legendre(m, x);
                // P_m'' from the Legendre ODE
                let ddp = (2.0 * x * dp - mf * (mf + 1.0) * p) / (1.0 - x * x);
                let dx = dp / ddp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
        }
        let (p, _) = legendre(m, x);
        nodes.push(x);
        weights.push(2.0 / (mf * (mf + 1.0) * p * p));
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to `[0, 1]`, exact to degree `2n - 1`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (
        x.iter().map(|&t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|&t| 0.5 * t).collect(),
    )
}

/// Number of Gauss points per direction for an exact degree-`order` triangle rule.
fn collapsed_points(order: usize) -> usize {
    (order + 3) / 2
}

/// Degree-`order` exact rule on the triangle `(a, b, c)`, appended to `rule`.
pub fn triangle_rule_into(a: Point2, b: Point2, c: Point2, order: usize, rule: &mut QuadratureRule) {
    let n = collapsed_points(order);
    let (x, w) = gauss_legendre_unit(n);
    let jac = (b - a).cross(c - a).abs();
    for j in 0..n {
        let eta = x[j];
        for i in 0..n {
            let xi = x[i] * (1.0 - eta);
            rule.points.push(a + (b - a) * xi + (c - a) * eta);
            rule.weights.push(w[i] * w[j] * (1.0 - eta) * jac);
        }
    }
}

pub fn triangle_rule(a: Point2, b: Point2, c: Point2, order: usize) -> QuadratureRule {
    let mut rule = QuadratureRule::default();
    triangle_rule_into(a, b, c, order, &mut rule);
    rule
}

/// Degree-`order` exact rule on a convex polygon, built from a fan of triangles
/// around the barycenter.
pub fn polygon_quadrature(vertices: &[Point2], order: usize) -> Result<QuadratureRule> {
    if order < 1 {
        return Err(Error::InvalidArgument("quadrature order must be >= 1".into()));
    }
    if !geometry::is_convex(vertices) {
        return Err(Error::Unsupported(
            "polygon quadrature requires a convex counterclockwise cell".into(),
        ));
    }
    let center = geometry::centroid(vertices);
    let n = vertices.len();
    let mut rule = QuadratureRule::default();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if (a - center).cross(b - center) <= 0.0 {
            continue;
        }
        triangle_rule_into(center, a, b, order, &mut rule);
    }
    Ok(rule)
}

/// Gauss-Lobatto nodes with `k + 1` points on the segment `a -> b`, with weights
/// scaled by the segment length. The `k - 1` interior nodes are the edge DoF sites.
pub fn edge_gauss_lobatto(a: Point2, b: Point2, k: usize) -> Result<(Vec<Point2>, Vec<f64>)> {
    if k < 2 {
        return Err(Error::Unsupported("edge nodes need k >= 2".into()));
    }
    let (x, w) = gauss_lobatto(k + 1);
    let len = a.distance(b);
    Ok((
        x.iter().map(|&t| a.lerp(b, 0.5 * (t + 1.0))).collect(),
        w.iter().map(|&t| 0.5 * t * len).collect(),
    ))
}
