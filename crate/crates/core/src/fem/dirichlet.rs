use super::space::Constraints;
use crate::error::{Error, Result};
use crate::linalg::{BlockSystem, SparseMatrix};

/// Symmetric elimination of a fixed set of constrained dofs.
///
/// The eliminated matrix has the constrained rows and columns removed and a
/// unit diagonal in their place. The removed column entries are kept as a lift
/// operator, so right-hand sides for new boundary values are cheap to form.
#[derive(Debug, Clone)]
pub struct DirichletElimination {
    matrix: SparseMatrix,
    lift: SparseMatrix,
    constrained: Vec<bool>,
}

impl DirichletElimination {
    pub fn new(a: &SparseMatrix, dofs: impl IntoIterator<Item = usize>) -> Result<Self> {
        let n = a.n_rows();
        if !a.is_square() {
            return Err(Error::Dimension { expected: n, got: a.n_cols() });
        }
        let mut constrained = vec![false; n];
        for d in dofs {
            if d >= n {
                return Err(Error::Argument(format!("constrained dof {d} outside a system of size {n}")));
            }
            constrained[d] = true;
        }
        let mut kept = Vec::with_capacity(a.nnz());
        let mut lift = Vec::new();
        for (i, j, v) in a.triplets() {
            match (constrained[i], constrained[j]) {
                (false, false) => kept.push((i, j, v)),
                (false, true) => lift.push((i, j, v)),
                _ => {}
            }
        }
        for (d, &c) in constrained.iter().enumerate() {
            if c {
                kept.push((d, d, 1.0));
            }
        }
        let mut matrix = SparseMatrix::from_triplets(n, n, &kept)?;
        if a.symmetric_flag() {
            matrix.mark_symmetric()?;
        }
        Ok(Self {
            matrix,
            lift: SparseMatrix::from_triplets(n, n, &lift)?,
            constrained,
        })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    /// Right-hand side of the eliminated system for prescribed values.
    /// Every constrained dof must have a value and no other dof may.
    pub fn rhs(&self, rhs: &[f64], values: &Constraints) -> Result<Vec<f64>> {
        let n = self.constrained.len();
        if rhs.len() != n {
            return Err(Error::Dimension { expected: n, got: rhs.len() });
        }
        let mut g = vec![0.0; n];
        let mut count = 0;
        for (d, v) in values.iter() {
            if d >= n || !self.constrained[d] {
                return Err(Error::Argument(format!("dof {d} was not eliminated")));
            }
            g[d] = v;
            count += 1;
        }
        if count != self.constrained.iter().filter(|&&c| c).count() {
            return Err(Error::Argument("missing values for eliminated dofs".into()));
        }
        let lifted = self.lift.spmv(&g)?;
        Ok((0..n)
            .map(|i| if self.constrained[i] { g[i] } else { rhs[i] - lifted[i] })
            .collect())
    }
}

/// One-shot symmetric elimination on a block system.
pub fn apply_dirichlet(system: &BlockSystem, rhs: &[f64], constraints: &Constraints) -> Result<(BlockSystem, Vec<f64>)> {
    let elim = DirichletElimination::new(system.matrix(), constraints.dofs())?;
    let b = elim.rhs(rhs, constraints)?;
    Ok((system.with_matrix(elim.matrix)?, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_bilinear, CoefficientSpec, FeSpace, FormKind, SpaceKind};
    use crate::linalg::factorize;
    use crate::mesh::{unit_square_mesh, BoundaryTag};
    use std::sync::Arc;

    fn small() -> BlockSystem {
        let a = SparseMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 2.0)]).unwrap();
        BlockSystem::new(&[("x", 3)], vec![(0, 0, a)]).unwrap()
    }

    #[test]
    fn no_constraints_leaves_system() {
        let sys = small();
        let (out, b) = apply_dirichlet(&sys, &[1.0, 2.0, 3.0], &Constraints::new()).unwrap();
        assert_eq!(out.matrix(), sys.matrix());
        assert_eq!(b, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn all_constrained_gives_identity() {
        let sys = small();
        let mut c = Constraints::new();
        for d in 0..3 {
            c.insert(d, 0.0).unwrap();
        }
        let (out, b) = apply_dirichlet(&sys, &[1.0, 2.0, 3.0], &c).unwrap();
        assert_eq!(out.matrix(), &SparseMatrix::identity(3));
        assert_eq!(b, vec![0.0; 3]);
    }

    #[test]
    fn lift_moves_known_values() {
        let sys = small();
        let mut c = Constraints::new();
        c.insert(0, 5.0).unwrap();
        let (out, b) = apply_dirichlet(&sys, &[0.0, 0.0, 0.0], &c).unwrap();
        assert_eq!(b, vec![5.0, 5.0, 0.0]);
        assert_eq!(out.matrix().get(1, 0), 0.0);
        assert_eq!(out.matrix().get(0, 0), 1.0);
    }

    #[test]
    fn poisson_reproduces_linear_field() {
        let m = Arc::new(unit_square_mesh(6).unwrap());
        let p = FeSpace::new(SpaceKind::MultiScalarP1 { networks: 1 }, m).unwrap();
        let coeff = CoefficientSpec {
            mu: 1.0,
            lambda: 1.0,
            alpha: vec![1.0],
            storage: vec![0.0],
            conductivity: vec![1.0],
            exchange: vec![vec![0.0]],
        };
        let k = assemble_bilinear(FormKind::NetworkStiffness, &p, &p, &coeff).unwrap();
        let sys = BlockSystem::new(&[("p", p.n_dofs())], vec![(0, 0, k)]).unwrap();
        let mut c = Constraints::new();
        for node in p.boundary_nodes(&BoundaryTag::ALL) {
            c.insert(node, p.node_coords(node)[0]).unwrap();
        }
        let (out, b) = apply_dirichlet(&sys, &vec![0.0; p.n_dofs()], &c).unwrap();
        assert!(out.matrix().symmetric_flag());
        let x = factorize(out.matrix()).unwrap().solve(&b).unwrap();
        for node in 0..p.n_nodes() {
            assert!((x[node] - p.node_coords(node)[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn rhs_requires_matching_set() {
        let e = DirichletElimination::new(small().matrix(), [1]).unwrap();
        assert!(e.rhs(&[0.0; 3], &Constraints::new()).is_err());
        let mut c = Constraints::new();
        c.insert(2, 1.0).unwrap();
        assert!(e.rhs(&[0.0; 3], &c).is_err());
    }
}
