//! Scaled monomials on a cell and the gradient/perp splitting of vector monomials.
//!
//! All polynomial coefficient vectors in this crate index monomials in graded
//! lexicographic order: `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...`.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::Point2;
use crate::quadrature::QuadratureRule;

/// Exponent pair of a scalar monomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex {
    pub x: usize,
    pub y: usize,
}

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex { x: 0, y: 0 };

    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub const fn degree(self) -> usize {
        self.x + self.y
    }

    /// Position in the graded lexicographic ordering.
    pub const fn index(self) -> usize {
        let d = self.degree();
        d * (d + 1) / 2 + self.y
    }

    pub const fn from_index(i: usize) -> Self {
        let mut d = 0;
        while (d + 1) * (d + 2) / 2 <= i {
            d += 1;
        }
        let y = i - d * (d + 1) / 2;
        Self { x: d - y, y }
    }

    pub const fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

/// Dimension of the scalar polynomial space of total degree `k` in 2D.
pub const fn dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Dimension of `P_k`, with `P_{-1}` (and below) empty.
pub fn dim_signed(k: isize) -> usize {
    if k < 0 {
        0
    } else {
        dim(k as usize)
    }
}

/// All multi-indices of degree at most `k`, in basis order.
pub fn multi_indices(k: usize) -> impl Iterator<Item = MultiIndex> {
    (0..dim(k)).map(MultiIndex::from_index)
}

/// Scaled monomials `m_α(x) = ((x - x_T)/h_T)^α` of degree at most `degree`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialBasis {
    pub center: Point2,
    pub h: f64,
    pub degree: usize,
}

impl MonomialBasis {
    pub fn new(center: Point2, h: f64, degree: usize) -> Self {
        Self { center, h, degree }
    }

    pub fn len(&self) -> usize {
        dim(self.degree)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Scaled local coordinates of `p`.
    pub fn local(&self, p: Point2) -> (f64, f64) {
        ((p.x - self.center.x) / self.h, (p.y - self.center.y) / self.h)
    }

    /// Values of all monomials at `p`, written into `out` (length `self.len()`).
    pub fn eval_into(&self, p: Point2, out: &mut [f64]) {
        let (sx, sy) = self.local(p);
        eval_scaled(sx, sy, self.degree, out);
    }

    pub fn eval(&self, p: Point2) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(p, &mut out);
        out
    }

    /// Gradients of all monomials at `p`.
    pub fn grad_into(&self, p: Point2, out: &mut [[f64; 2]]) {
        let (sx, sy) = self.local(p);
        let mut vals = vec![0.0; dim(self.degree)];
        eval_scaled(sx, sy, self.degree, &mut vals);
        for (i, g) in out.iter_mut().enumerate().take(self.len()) {
            let a = MultiIndex::from_index(i);
            let gx = if a.x > 0 {
                a.x as f64 * vals[MultiIndex::new(a.x - 1, a.y).index()] / self.h
            } else {
                0.0
            };
            let gy = if a.y > 0 {
                a.y as f64 * vals[MultiIndex::new(a.x, a.y - 1).index()] / self.h
            } else {
                0.0
            };
            *g = [gx, gy];
        }
    }

    pub fn grad(&self, p: Point2) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0; 2]; self.len()];
        self.grad_into(p, &mut out);
        out
    }

    /// Evaluates the polynomial with coefficients `coeffs` (length at most `self.len()`).
    pub fn eval_poly(&self, coeffs: &[f64], p: Point2) -> f64 {
        let (sx, sy) = self.local(p);
        coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let a = MultiIndex::from_index(i);
                c * powi(sx, a.x) * powi(sy, a.y)
            })
            .sum()
    }
}

fn powi(x: f64, n: usize) -> f64 {
    let mut r = 1.0;
    for _ in 0..n {
        r *= x;
    }
    r
}

fn eval_scaled(sx: f64, sy: f64, degree: usize, out: &mut [f64]) {
    out[0] = 1.0;
    for d in 1..=degree {
        let base = d * (d + 1) / 2;
        let prev = (d - 1) * d / 2;
        // (d, 0) from (d-1, 0); every other entry from the one with y-1
        out[base] = out[prev] * sx;
        for y in 1..=d {
            out[base + y] = out[prev + y - 1] * sy;
        }
    }
}

/// Integrals `∫_T m_α` for all `|α| <= degree`, from which every Gram entry
/// between scaled monomials on the same cell follows (`m_α m_β = m_{α+β}`).
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialIntegrals {
    pub degree: usize,
    values: Vec<f64>,
}

impl MonomialIntegrals {
    pub fn from_rule(basis: &MonomialBasis, rule: &QuadratureRule) -> Self {
        let n = basis.len();
        let mut values = vec![0.0; n];
        let mut buf = vec![0.0; n];
        for (&p, &w) in rule.points.iter().zip(&rule.weights) {
            basis.eval_into(p, &mut buf);
            for (v, b) in values.iter_mut().zip(&buf) {
                *v += w * b;
            }
        }
        Self { degree: basis.degree, values }
    }

    pub fn get(&self, a: MultiIndex) -> f64 {
        debug_assert!(a.degree() <= self.degree);
        self.values[a.index()]
    }

    /// `∫_T m_α m_β`.
    pub fn product(&self, a: MultiIndex, b: MultiIndex) -> f64 {
        self.get(a.add(b))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Component direction of a vector monomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    X,
    Y,
}

/// Splitting of a vector monomial into `c_g h_T ∇m_{grad} + c_p x^⊥ m_{perp}`,
/// with `x^⊥ = ((y - y_T)/h_T, -(x - x_T)/h_T)`.
///
/// `grad` carries the full coefficient in front of `∇m` (including `h_T`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionCoefficients {
    pub grad: (f64, MultiIndex),
    pub perp: Option<(f64, MultiIndex)>,
}

/// Closed-form decomposition of the vector monomial with scalar exponent `beta`
/// placed in component `direction`.
pub fn vector_monomial_decompose(beta: MultiIndex, direction: Direction, h: f64) -> DecompositionCoefficients {
    let d1 = (beta.degree() + 1) as f64;
    match direction {
        Direction::X => DecompositionCoefficients {
            grad: (h / d1, MultiIndex::new(beta.x + 1, beta.y)),
            perp: (beta.y > 0).then(|| (beta.y as f64 / d1, MultiIndex::new(beta.x, beta.y - 1))),
        },
        Direction::Y => DecompositionCoefficients {
            grad: (h / d1, MultiIndex::new(beta.x, beta.y + 1)),
            perp: (beta.x > 0).then(|| (-(beta.x as f64) / d1, MultiIndex::new(beta.x - 1, beta.y))),
        },
    }
}

impl DecompositionCoefficients {
    /// Evaluates the reconstructed vector field at `p`.
    pub fn eval(&self, basis: &MonomialBasis, p: Point2) -> [f64; 2] {
        let (c, g) = self.grad;
        let big = MonomialBasis::new(basis.center, basis.h, g.degree());
        let grads = big.grad(p);
        let mut v = [c * grads[g.index()][0], c * grads[g.index()][1]];
        if let Some((c, m)) = self.perp {
            let (sx, sy) = basis.local(p);
            let val = MonomialBasis::new(basis.center, basis.h, m.degree()).eval(p)[m.index()];
            v[0] += c * sy * val;
            v[1] -= c * sx * val;
        }
        v
    }
}
