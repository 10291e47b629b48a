//! Broken error norms, discrete divergence and convergence rates.

use alloc::vec::Vec;

use crate::assembly::{DiscreteState, Discretization};
use crate::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorNorms {
    /// `‖∇u - Π0∇u_h‖`.
    pub grad: f64,
    /// `‖u - Π0 u_h‖`.
    pub l2: f64,
    /// `‖p - p_h‖`.
    pub pressure: f64,
}

/// Broken norms against an exact solution, by cell quadrature.
pub fn error_norms<U, G, P>(disc: &Discretization, state: &DiscreteState, u: U, grad: G, p: P) -> ErrorNorms
where
    U: Fn(Point2) -> [f64; 2],
    G: Fn(Point2) -> [[f64; 2]; 2],
    P: Fn(Point2) -> f64,
{
    let (mut eg, mut el, mut ep) = (0.0, 0.0, 0.0);
    for (c, o) in disc.ops.iter().enumerate() {
        let local = disc.local_velocity(state, c);
        let v0 = o.apply(&o.pi_zero, &local);
        let g0 = o.apply(&o.pi_zero_grad, &local);
        let ph = disc.local_pressure(state, c);
        for (&x, &w) in o.rule.points.iter().zip(&o.rule.weights) {
            let (ue, ge) = (u(x), grad(x));
            let uh = o.eval_vector(&v0, x);
            let gh = o.eval_tensor(&g0, x);
            el += w * ((ue[0] - uh[0]).powi(2) + (ue[1] - uh[1]).powi(2));
            for a in 0..2 {
                for b in 0..2 {
                    eg += w * (ge[a][b] - gh[a][b]).powi(2);
                }
            }
            ep += w * (p(x) - o.eval_scalar_km1(ph, x)).powi(2);
        }
    }
    ErrorNorms { grad: libm::sqrt(eg), l2: libm::sqrt(el), pressure: libm::sqrt(ep) }
}

/// `‖div u_h‖_{L2(T)}` per cell.
pub fn divergence_norms(disc: &Discretization, state: &DiscreteState) -> Vec<f64> {
    (0..disc.n_cells()).map(|c| disc.ops[c].div_norm(&disc.local_velocity(state, c))).collect()
}

/// Broken H1 seminorm `(Σ_T |Π∇ u_h|²_{H1(T)})^{1/2}`.
pub fn broken_h1_seminorm(disc: &Discretization, state: &DiscreteState) -> f64 {
    let mut s = 0.0;
    for (c, o) in disc.ops.iter().enumerate() {
        let u = disc.local_velocity(state, c);
        let ku = o.apply(&o.stiffness, &u);
        s += u.iter().zip(&ku).map(|(a, b)| a * b).sum::<f64>();
    }
    libm::sqrt(s.max(0.0))
}

/// `log(e_prev / e_cur) / log(h_prev / h_cur)`.
pub fn convergence_rate(e_prev: f64, e_cur: f64, h_prev: f64, h_cur: f64) -> f64 {
    libm::log(e_prev / e_cur) / libm::log(h_prev / h_cur)
}

/// Rates between consecutive levels; the first entry is `None`.
pub fn rates(errors: &[f64], h: &[f64]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|i| (i > 0).then(|| convergence_rate(errors[i - 1], errors[i], h[i - 1], h[i])))
        .collect()
}

/// `‖a - b‖₂ / ‖b‖₂`.
pub fn relative_l2(sampled: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = sampled.iter().zip(reference).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = reference.iter().map(|b| b * b).sum();
    libm::sqrt(num / den)
}
