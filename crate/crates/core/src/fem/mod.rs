//! Lagrange elements, quadrature, dof maps and assembly.

mod assemble;
mod basis;
mod dirichlet;
mod quadrature;
mod space;

pub use assemble::{assemble_bilinear, assemble_functional, CoefficientSpec, FormKind, Load, LOAD_QUADRATURE, MATRIX_QUADRATURE};
pub use basis::{basis_gradients, basis_values, reference_basis, ElementGeometry, ElementKind, P2_EDGES, REFERENCE_GRAD_LAMBDA};
pub use dirichlet::{apply_dirichlet, DirichletElimination};
pub use quadrature::{edge_rule, quadrature_rule, QuadratureRule};
pub use space::{Constraints, DofMap, FeSpace, SpaceKind};
