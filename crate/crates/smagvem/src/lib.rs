//! Steady Navier-Stokes solver with a Smagorinsky eddy viscosity on polygonal
//! meshes, built on `smagvem-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod linsolve;
pub mod newton;
pub mod problem;
pub mod reference;
pub mod verification;

pub use error::{Result, SolverError};
pub use smagvem_core as core;
