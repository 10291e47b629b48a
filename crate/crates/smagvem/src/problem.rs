//! Problem definitions: discretization, physics, forcing and boundary data.

use rayon::prelude::*;
use smagvem_core::assembly::{
    CellScale, DiscreteState, Discretization, Forcing, LocalContribution, Physics, Smagorinsky, SparseSystem,
};
use smagvem_core::cases::{self, ManufacturedCase};
use smagvem_core::mesh::PolygonalMesh;
use smagvem_core::vem::element_operators;
use smagvem_core::Point2;

use crate::error::Result;

pub type ForcingFn = Box<dyn Fn(CellScale, Point2) -> [f64; 2] + Send + Sync>;
pub type BoundaryFn = Box<dyn Fn(Point2) -> [f64; 2] + Send + Sync>;

/// Element operators for every cell, computed in parallel.
pub fn build_discretization(mesh: &PolygonalMesh, k: usize) -> Result<Discretization> {
    let ops = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| element_operators(mesh, c, k))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Discretization::from_operators(mesh, k, ops)?)
}

/// Residual and Jacobian with the element loop spread over the rayon pool.
/// Local blocks are scattered in cell order, so the result does not depend
/// on the number of workers.
pub fn assemble_parallel(
    disc: &Discretization,
    state: &DiscreteState,
    physics: &Physics,
    forcing: Option<Forcing<'_>>,
    with_jacobian: bool,
) -> Result<SparseSystem> {
    let locals: Vec<LocalContribution> = (0..disc.n_cells())
        .into_par_iter()
        .map(|c| disc.local_contribution(c, &disc.local_velocity(state, c), physics, forcing, with_jacobian))
        .collect();
    Ok(disc.scatter(state, &locals)?)
}

/// A steady problem on a fixed mesh: all boundary DoFs are Dirichlet.
pub struct Problem {
    pub mesh: PolygonalMesh,
    pub disc: Discretization,
    pub physics: Physics,
    pub forcing: Option<ForcingFn>,
    pub boundary: BoundaryFn,
}

impl Problem {
    pub fn new(mesh: PolygonalMesh, k: usize, physics: Physics) -> Result<Self> {
        let disc = build_discretization(&mesh, k)?;
        Ok(Self { mesh, disc, physics, forcing: None, boundary: Box::new(|_| [0.0, 0.0]) })
    }

    pub fn with_forcing(mut self, f: ForcingFn) -> Self {
        self.forcing = Some(f);
        self
    }

    pub fn with_boundary(mut self, g: BoundaryFn) -> Self {
        self.boundary = g;
        self
    }

    pub fn k(&self) -> usize {
        self.disc.k
    }

    pub fn n_unknowns(&self) -> usize {
        self.disc.dofs.n_unknowns()
    }

    pub fn forcing(&self) -> Option<Forcing<'_>> {
        self.forcing.as_deref().map(|f| f as Forcing<'_>)
    }

    /// Zero interior state carrying the boundary data.
    pub fn boundary_state(&self) -> Result<DiscreteState> {
        let mut s = self.disc.zero_state();
        self.disc.apply_dirichlet(&mut s, &self.boundary)?;
        Ok(s)
    }

    pub fn assemble(&self, state: &DiscreteState, physics: &Physics, with_jacobian: bool) -> Result<SparseSystem> {
        assemble_parallel(&self.disc, state, physics, self.forcing(), with_jacobian)
    }

    pub fn residual_norm(&self, state: &DiscreteState) -> Result<f64> {
        let sys = self.assemble(state, &self.physics, false)?;
        Ok(crate::linsolve::norm(&sys.residual))
    }

    /// Reynolds number `1/ν`.
    pub fn re(&self) -> f64 {
        1.0 / self.physics.nu
    }

    pub fn set_re(&mut self, re: f64) {
        self.physics.nu = 1.0 / re;
    }
}

/// Lid-driven cavity: `(1, 0)` on the lid, no slip elsewhere, no forcing.
pub fn cavity_setup(re: f64, mesh: PolygonalMesh, k: usize, smagorinsky: Option<Smagorinsky>) -> Result<Problem> {
    let physics = cases::cavity_physics(re, smagorinsky)?;
    Ok(Problem::new(mesh, k, physics)?.with_boundary(Box::new(cases::cavity_lid)))
}

/// Manufactured problem with the exact velocity as boundary data.
pub fn manufactured_problem(case: ManufacturedCase, mesh: PolygonalMesh, k: usize) -> Result<Problem> {
    Ok(Problem::new(mesh, k, case.physics())?
        .with_forcing(Box::new(move |s, p| case.forcing(s, p)))
        .with_boundary(Box::new(move |p| case.velocity(p))))
}
