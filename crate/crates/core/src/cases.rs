//! Manufactured solutions and the lid-driven cavity data.

use crate::assembly::{CellScale, Physics, Smagorinsky};
use crate::{Error, Point2, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    /// `u = (-y, x)`, `p = λx³ + (x² + y²)/2 - 1/3 - λ/4`, `f = (3λx², 0)`.
    Irrotational,
    /// `u = (-x + y², y - x²)`, `p = 2x - 2y`, forcing from the Smagorinsky strong form.
    P2P1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub kind: CaseKind,
    pub nu: f64,
    pub lambda: f64,
    pub smagorinsky: Option<Smagorinsky>,
}

impl ManufacturedCase {
    pub fn irrotational(lambda: f64) -> Self {
        Self { kind: CaseKind::Irrotational, nu: 1.0, lambda, smagorinsky: None }
    }

    /// P2P1 case at Reynolds number `re` (`ν = 1/re`) with the default eddy model.
    pub fn p2p1(re: f64) -> Self {
        Self { kind: CaseKind::P2P1, nu: 1.0 / re, lambda: 0.0, smagorinsky: Some(Smagorinsky::default()) }
    }

    pub fn with_smagorinsky(mut self, s: Option<Smagorinsky>) -> Self {
        self.smagorinsky = s;
        self
    }

    pub fn re(&self) -> f64 {
        1.0 / self.nu
    }

    pub fn physics(&self) -> Physics {
        Physics { nu: self.nu, convection: true, smagorinsky: self.smagorinsky }
    }

    pub fn velocity(&self, p: Point2) -> [f64; 2] {
        let (x, y) = (p.x, p.y);
        match self.kind {
            CaseKind::Irrotational => [-y, x],
            CaseKind::P2P1 => [-x + y * y, y - x * x],
        }
    }

    /// `grad[a][b] = ∂_b u_a`.
    pub fn velocity_gradient(&self, p: Point2) -> [[f64; 2]; 2] {
        match self.kind {
            CaseKind::Irrotational => [[0.0, -1.0], [1.0, 0.0]],
            CaseKind::P2P1 => [[-1.0, 2.0 * p.y], [-2.0 * p.x, 1.0]],
        }
    }

    pub fn pressure(&self, p: Point2) -> f64 {
        let (x, y) = (p.x, p.y);
        match self.kind {
            CaseKind::Irrotational => {
                self.lambda * x * x * x + 0.5 * (x * x + y * y) - 1.0 / 3.0 - self.lambda / 4.0
            }
            CaseKind::P2P1 => 2.0 * x - 2.0 * y,
        }
    }

    /// `f = -div((ν + ν_S) ∇u) + (∇u) u + ∇p`, with `ν_S = C_S² s_T² |∇u|`.
    pub fn forcing(&self, scale: CellScale, p: Point2) -> [f64; 2] {
        let (x, y) = (p.x, p.y);
        match self.kind {
            CaseKind::Irrotational => {
                // Δu = 0 and |∇u| is constant, so no viscous or eddy term survives
                [3.0 * self.lambda * x * x, 0.0]
            }
            CaseKind::P2P1 => {
                let lap = [2.0, -2.0];
                let conv = [x + y * y - 2.0 * x * x * y, x * x - 2.0 * x * y * y + y];
                let grad_p = [2.0, -2.0];
                let mut f = [
                    -self.nu * lap[0] + conv[0] + grad_p[0],
                    -self.nu * lap[1] + conv[1] + grad_p[1],
                ];
                if let Some(s) = self.smagorinsky {
                    let c = s.factor(scale);
                    let n = libm::sqrt(2.0 + 4.0 * x * x + 4.0 * y * y);
                    // -ν_S Δu - (∇u) ∇ν_S, with ∇|∇u| = 4 (x, y) / |∇u|
                    f[0] += -c * n * lap[0] - c * (-4.0 * x + 8.0 * y * y) / n;
                    f[1] += -c * n * lap[1] - c * (-8.0 * x * x + 4.0 * y) / n;
                }
                f
            }
        }
    }
}

/// Builds a case by name: `irrotational` takes `λ`, `p2p1` takes `Re`.
pub fn make_case(name: &str, param: f64) -> Result<ManufacturedCase> {
    if !(param.is_finite() && param > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("case parameter must be positive, got {param}")));
    }
    match name {
        "irrotational" => Ok(ManufacturedCase::irrotational(param)),
        "p2p1" => Ok(ManufacturedCase::p2p1(param)),
        other => Err(Error::InvalidArgument(alloc::format!("unknown case `{other}`"))),
    }
}

/// Lid-driven cavity boundary data: `(1, 0)` on `y = 1` (top corners included),
/// zero elsewhere.
pub fn cavity_lid(p: Point2) -> [f64; 2] {
    if p.y >= 1.0 - 1e-14 {
        [1.0, 0.0]
    } else {
        [0.0, 0.0]
    }
}

/// Cavity physics at Reynolds number `re`.
pub fn cavity_physics(re: f64, smagorinsky: Option<Smagorinsky>) -> Result<Physics> {
    if !(re.is_finite() && re > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("Reynolds number must be positive, got {re}")));
    }
    Ok(Physics { nu: 1.0 / re, convection: true, smagorinsky })
}
