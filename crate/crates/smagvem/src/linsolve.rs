//! Direct sparse solves of the assembled Newton systems.
//!
//! The augmented Newton matrix carries one dense border (the pressure-mean
//! multiplier). A column-ordered LU of the full matrix sees that row couple
//! every pressure column and fills in badly, so [`linear_solve`] factors the
//! sparse core with one pinned pressure diagonal instead and recovers the
//! border unknowns from a 2x2 correction. Every solve is checked against the
//! full matrix and refined there.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Result, SolverError};

/// Relative residual `‖b - Ax‖ / ‖b‖` accepted from a solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
const REFINEMENT_STEPS: usize = 3;

/// Sparse LU factorization of a square matrix given as triplets.
pub struct SparseLu {
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl SparseLu {
    /// Factors an `n × n` matrix; duplicate entries are summed.
    pub fn factor(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        check_bounds(n, triplets)?;
        let entries: Vec<Triplet<usize, usize, f64>> =
            triplets.iter().map(|&(row, col, val)| Triplet::new(row, col, val)).collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &entries)
            .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => {
                SolverError::Factorization(format!("structurally singular at column {index}"))
            }
            LuError::Generic(g) => SolverError::Factorization(format!("{g:?}")),
        })?;
        Ok(Self { n, triplets: triplets.to_vec(), lu })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` with a few steps of iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        refined_solve(self.n, &self.triplets, b, |r| Ok(self.raw_solve(r)))
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(rhs.as_mut());
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }
}

/// LU of a matrix `[K c; dᵀ e]` whose last row and column form a dense
/// border, through the factorization of `K + α e_j e_jᵀ`.
pub struct BorderedLu {
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
    core: SparseLu,
    pin: usize,
    alpha: f64,
    d: Vec<(usize, f64)>,
    e: f64,
    u_border: Vec<f64>,
    u_pin: Vec<f64>,
}

impl BorderedLu {
    pub fn factor(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        check_bounds(n, triplets)?;
        if n < 2 {
            return Err(SolverError::InvalidArgument("bordered solve needs at least two unknowns".into()));
        }
        let b = n - 1;
        let mut c = vec![0.0; b];
        let mut d = Vec::new();
        let mut e = 0.0;
        let mut core = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            match (i == b, j == b) {
                (true, true) => e += v,
                (true, false) => d.push((j, v)),
                (false, true) => c[i] += v,
                (false, false) => core.push((i, j, v)),
            }
        }
        // pin the core unknown with the largest border coupling
        let pin = (0..b)
            .max_by(|&x, &y| c[x].abs().total_cmp(&c[y].abs()))
            .filter(|&j| c[j] != 0.0)
            .ok_or_else(|| SolverError::Factorization("empty border column".into()))?;
        let alpha = core.iter().filter(|t| t.1 == pin).map(|t| t.2.abs()).fold(0.0, f64::max).max(1.0);
        core.push((pin, pin, alpha));
        let core = SparseLu::factor(b, &core)?;
        let u_border = core.raw_solve(&c);
        let mut unit = vec![0.0; b];
        unit[pin] = 1.0;
        let u_pin = core.raw_solve(&unit);
        Ok(Self { n, triplets: triplets.to_vec(), core, pin, alpha, d, e, u_border, u_pin })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        refined_solve(self.n, &self.triplets, rhs, |r| self.raw_solve(r))
    }

    fn raw_solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let b = self.n - 1;
        let u_f = self.core.raw_solve(&rhs[..b]);
        let dot = |u: &[f64]| self.d.iter().map(|&(j, v)| v * u[j]).sum::<f64>();
        let j = self.pin;
        // unknowns (s, λ) with s = x_j:
        //   (1 - α u_pin_j) s + u_border_j λ = u_f_j
        //   α dᵀu_pin s + (e - dᵀu_border) λ = g - dᵀu_f
        let (a11, a12, r1) = (1.0 - self.alpha * self.u_pin[j], self.u_border[j], u_f[j]);
        let (a21, a22, r2) = (self.alpha * dot(&self.u_pin), self.e - dot(&self.u_border), rhs[b] - dot(&u_f));
        let det = a11 * a22 - a12 * a21;
        let scale = (a11.abs() + a12.abs()) * (a21.abs() + a22.abs());
        if !(det.abs() > 1e-14 * scale) {
            return Err(SolverError::Factorization("degenerate border correction".into()));
        }
        let s = (r1 * a22 - a12 * r2) / det;
        let lam = (a11 * r2 - a21 * r1) / det;
        let mut x: Vec<f64> = (0..b)
            .map(|i| u_f[i] - lam * self.u_border[i] + self.alpha * s * self.u_pin[i])
            .collect();
        x.push(lam);
        Ok(x)
    }
}

fn check_bounds(n: usize, triplets: &[(usize, usize, f64)]) -> Result<()> {
    match triplets.iter().find(|t| t.0 >= n || t.1 >= n) {
        Some(&(r, c, _)) => Err(SolverError::InvalidArgument(format!("entry ({r}, {c}) outside a {n}x{n} matrix"))),
        None => Ok(()),
    }
}

/// `b - A x`.
pub fn residual(triplets: &[(usize, usize, f64)], x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = b.to_vec();
    for &(i, j, v) in triplets {
        r[i] -= v * x[j];
    }
    r
}

fn refined_solve<F>(n: usize, triplets: &[(usize, usize, f64)], b: &[f64], raw: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if b.len() != n {
        return Err(SolverError::InvalidArgument(format!("rhs has {} entries, expected {n}", b.len())));
    }
    let bn = norm(b);
    if bn == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = raw(b)?;
    let mut rel = f64::INFINITY;
    for step in 0..=REFINEMENT_STEPS {
        let r = residual(triplets, &x, b);
        rel = norm(&r) / bn;
        if !rel.is_finite() || rel <= RESIDUAL_TOLERANCE || step == REFINEMENT_STEPS {
            break;
        }
        let dx = raw(&r)?;
        x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
    }
    if rel.is_finite() && rel <= RESIDUAL_TOLERANCE {
        Ok(x)
    } else {
        Err(SolverError::Singular { residual: rel })
    }
}

/// Solves `A x = b` for a matrix given as triplets.
pub fn solve_triplets(n: usize, triplets: &[(usize, usize, f64)], b: &[f64]) -> Result<Vec<f64>> {
    SparseLu::factor(n, triplets)?.solve(b)
}

/// Newton update: solves `J δ = -R` for an assembled system whose last
/// unknown is the pressure-mean multiplier. Falls back to a plain LU of the
/// whole matrix if the bordered route fails.
pub fn linear_solve(system: &smagvem_core::assembly::SparseSystem) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = system.residual.iter().map(|r| -r).collect();
    match BorderedLu::factor(system.n, &system.triplets).and_then(|lu| lu.solve(&rhs)) {
        Ok(x) => Ok(x),
        Err(_) => solve_triplets(system.n, &system.triplets, &rhs),
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let t: Vec<_> = (0..5).map(|i| (i, i, 1.0)).collect();
        let b = [1.0, -2.0, 3.5, 0.0, 1e-3];
        assert_eq!(solve_triplets(5, &t, &b).unwrap(), b.to_vec());
    }

    #[test]
    fn saddle_point_with_zero_block() {
        // [2 1; 1 0] x = [3, 1]  ->  x = (1, 1)
        let t = [(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0)];
        let x = solve_triplets(2, &t, &[3.0, 1.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bordered_matches_plain_lu() {
        // singular core (constant null vector in the last two unknowns) plus
        // a mean-constraint border
        let t = vec![
            (0, 0, 4.0), (0, 1, 1.0), (0, 2, 1.0), (0, 3, -1.0),
            (1, 0, 1.0), (1, 1, 3.0), (1, 2, -1.0), (1, 3, 1.0),
            (2, 0, 1.0), (2, 1, -1.0), (2, 4, 0.5),
            (3, 0, -1.0), (3, 1, 1.0), (3, 4, 0.5),
            (4, 2, 0.5), (4, 3, 0.5),
        ];
        let b = [1.0, 2.0, -0.5, 0.25, 0.0];
        let x0 = solve_triplets(5, &t, &b).unwrap();
        let x1 = BorderedLu::factor(5, &t).unwrap().solve(&b).unwrap();
        for (a, c) in x0.iter().zip(&x1) {
            assert!((a - c).abs() < 1e-13, "{x0:?} vs {x1:?}");
        }
    }

    #[test]
    fn singular_matrices_are_reported() {
        let t = [(0, 0, 1.0), (1, 0, 1.0)];
        assert!(solve_triplets(2, &t, &[1.0, 1.0]).is_err());
        let t = [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)];
        assert!(solve_triplets(2, &t, &[1.0, 2.0]).is_err());
        assert!(solve_triplets(2, &[(0, 3, 1.0)], &[1.0, 2.0]).is_err());
    }
}
