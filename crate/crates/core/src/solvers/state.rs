use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{assemble_bilinear, CoefficientSpec, Constraints, FeSpace, FormKind, SpaceKind};
use crate::linalg::{cg_solve, dot, SparseMatrix};
use crate::mesh::Mesh;
use crate::model::ProblemSpec;

/// Discrete unknowns at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub time: f64,
    /// Vector P2 coefficients, component-blocked.
    pub u: Vec<f64>,
    /// Scalar P1 coefficients.
    pub xi: Vec<f64>,
    /// Network P1 coefficients, network-blocked.
    pub p: Vec<f64>,
}

impl SystemState {
    pub fn zeros(disc: &Discretization, time: f64) -> Self {
        Self {
            time,
            u: vec![0.0; disc.displacement.n_dofs()],
            xi: vec![0.0; disc.total.n_dofs()],
            p: vec![0.0; disc.pressure.n_dofs()],
        }
    }

    /// Checks vector lengths against the spaces of `disc`.
    pub fn check(&self, disc: &Discretization) -> Result<()> {
        for (v, n) in [
            (&self.u, disc.displacement.n_dofs()),
            (&self.xi, disc.total.n_dofs()),
            (&self.p, disc.pressure.n_dofs()),
        ] {
            if v.len() != n {
                return Err(Error::Dimension { expected: n, got: v.len() });
            }
        }
        Ok(())
    }

    fn impose(v: &mut [f64], c: &Constraints) {
        for (d, val) in c.iter() {
            v[d] = val;
        }
    }
}

/// Finite-element spaces and the time-independent matrices of a problem.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Arc<Mesh>,
    pub coefficients: CoefficientSpec,
    pub displacement: FeSpace,
    pub total: FeSpace,
    pub pressure: FeSpace,
    /// `2 mu (eps(u), eps(v))`.
    pub elasticity: SparseMatrix,
    /// `(div u, eta)`: rows total pressure, columns displacement.
    pub divergence: SparseMatrix,
    /// `(1/lambda) (xi, eta)`.
    pub scalar_mass: SparseMatrix,
    /// Unweighted P1 mass matrix.
    pub unit_mass: SparseMatrix,
    /// `((S + alpha alpha^T / lambda) p, q)`.
    pub network_mass: SparseMatrix,
    pub stiffness: SparseMatrix,
    pub exchange: SparseMatrix,
    /// `(1/lambda) (alpha^T p, eta)`: rows total pressure, columns networks.
    pub coupling: SparseMatrix,
}

impl Discretization {
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        let mesh = spec.mesh.clone();
        let coeff = spec.params.coefficients();
        let n = spec.networks();
        let displacement = FeSpace::new(SpaceKind::VectorP2, mesh.clone())?;
        let total = FeSpace::new(SpaceKind::ScalarP1, mesh.clone())?;
        let pressure = FeSpace::new(SpaceKind::MultiScalarP1 { networks: n }, mesh.clone())?;
        let unit = CoefficientSpec { lambda: 1.0, ..coeff.clone() };
        Ok(Self {
            elasticity: assemble_bilinear(FormKind::Elasticity, &displacement, &displacement, &coeff)?,
            divergence: assemble_bilinear(FormKind::Divergence, &displacement, &total, &coeff)?,
            scalar_mass: assemble_bilinear(FormKind::ScalarMass, &total, &total, &coeff)?,
            unit_mass: assemble_bilinear(FormKind::ScalarMass, &total, &total, &unit)?,
            network_mass: assemble_bilinear(FormKind::NetworkMass, &pressure, &pressure, &coeff)?,
            stiffness: assemble_bilinear(FormKind::NetworkStiffness, &pressure, &pressure, &coeff)?,
            exchange: assemble_bilinear(FormKind::Exchange, &pressure, &pressure, &coeff)?,
            coupling: assemble_bilinear(FormKind::CouplingAlphaMass, &pressure, &total, &coeff)?,
            mesh,
            coefficients: coeff,
            displacement,
            total,
            pressure,
        })
    }

    pub fn networks(&self) -> usize {
        self.coefficients.networks()
    }

    /// `L2` norm of a P1 function.
    pub fn l2_p1(&self, v: &[f64]) -> f64 {
        let mv = self.unit_mass.spmv(v).expect("P1 vector length");
        dot(v, &mv).max(0.0).sqrt()
    }

    /// `L2` norm of a network-blocked P1 vector, summed over networks.
    pub fn l2_networks(&self, p: &[f64]) -> f64 {
        let n = self.total.n_dofs();
        p.chunks(n).map(|c| self.l2_p1(c).powi(2)).sum::<f64>().sqrt()
    }

    /// Nodal values of `alpha^T p`.
    pub fn alpha_combination(&self, p: &[f64]) -> Vec<f64> {
        let n = self.total.n_dofs();
        let mut out = vec![0.0; n];
        for (a, chunk) in self.coefficients.alpha.iter().zip(p.chunks(n)) {
            out.iter_mut().zip(chunk).for_each(|(o, v)| *o += a * v);
        }
        out
    }

    /// `sqrt(u^T A u) = sqrt(2 mu) ||eps(u)||`.
    pub fn energy_norm(&self, u: &[f64]) -> f64 {
        self.elasticity.bilinear(u, u).expect("P2 vector length").max(0.0).sqrt()
    }

    /// Initial state with Dirichlet values imposed. Without explicit data the
    /// total pressure is `alpha^T p_0 - lambda div u_0`, nodally when `u_0`
    /// vanishes and by `L2` projection otherwise.
    pub fn initial_state(&self, spec: &ProblemSpec) -> Result<SystemState> {
        let mut state = SystemState::zeros(self, 0.0);
        if let Some(u0) = &spec.initial_displacement {
            state.u = self.displacement.interpolate(|x| u0(x, 0.0).to_vec());
        }
        if let Some(p0) = &spec.initial_pressure {
            let n = self.networks();
            let bad = std::cell::Cell::new(None);
            state.p = self.pressure.interpolate(|x| {
                let mut v = p0(x, 0.0);
                if v.len() != n {
                    bad.set(Some(v.len()));
                    v.resize(n, 0.0);
                }
                v
            });
            if let Some(got) = bad.get() {
                return Err(Error::Dimension { expected: n, got });
            }
        }
        SystemState::impose(&mut state.u, &spec.displacement_constraints(&self.displacement, 0.0)?);
        SystemState::impose(&mut state.p, &spec.pressure_constraints(&self.pressure, 0.0)?);
        state.xi = match &spec.initial_total_pressure {
            Some(xi0) => self.total.interpolate(|x| vec![xi0(x, 0.0)]),
            None if spec.initial_displacement.is_none() => self.alpha_combination(&state.p),
            None => {
                let rhs = self.divergence.spmv(&state.u)?;
                let div = cg_solve(&self.unit_mass, &rhs, 1e-14, 10 * rhs.len() + 100)?.0;
                let lambda = self.coefficients.lambda;
                self.alpha_combination(&state.p).iter().zip(div).map(|(a, d)| a - lambda * d).collect()
            }
        };
        Ok(state)
    }
}
