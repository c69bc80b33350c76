//! Sparse storage and linear solvers.

mod block;
mod cg;
mod lu;
mod sparse;

pub use block::{Block, BlockSystem};
pub use cg::{cg_solve, cg_solve_from};
pub use lu::{factorize, FactorOptions, FactorPrecision, Factorization, FillStats, RefineStats, SINGULAR_RELATIVE};
pub use sparse::{dot, norm2, SparseMatrix};
