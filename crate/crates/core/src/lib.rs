//! Finite-element solver for quasi-static multiple-network poroelasticity in
//! the total-pressure formulation.
//!
//! Displacement and total pressure use Taylor-Hood P2/P1 elements, the network
//! pressures use P1. Time stepping is backward Euler, either monolithic or by
//! an iteration that alternates a pressure diffusion solve with a generalized
//! Stokes solve.

pub mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod solvers;
pub mod verify;

pub use error::{Error, Result};
