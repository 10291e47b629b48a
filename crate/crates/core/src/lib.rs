//! Divergence-free virtual elements of arbitrary order on polygonal meshes, with a
//! discrete Smagorinsky eddy-viscosity term for convection-dominated steady
//! Navier-Stokes flow.
//!
//! This crate is `no_std` (it needs `alloc`). It holds the algorithmic pieces:
//! mesh families, scaled monomial bases and quadrature, element projectors,
//! residual/Jacobian assembly, manufactured cases and error norms. Linear
//! solvers, the Newton driver and all file formats live in the `smagvem` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assembly;
pub mod basis;
pub mod cases;
mod error;
pub mod geometry;
pub mod locate;
pub mod mesh;
pub mod norms;
pub mod quadrature;
pub mod vem;

pub use error::{Error, Result};
pub use geometry::Point2;
