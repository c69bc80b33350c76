//! Monolithic backward-Euler scheme for `(u, xi, p)`.

use super::state::{Discretization, SystemState};
use crate::error::{Error, Result};
use crate::fem::{Constraints, DirichletElimination};
use crate::linalg::{BlockSystem, FactorOptions, Factorization, SparseMatrix};
use crate::model::ProblemSpec;

/// Refinement settings shared by all direct solves.
pub(crate) const REFINE_STEPS: usize = 2;
pub(crate) const REFINE_RTOL: f64 = 1e-14;
/// With the total pressure eliminated last the diagonal is a safe pivot;
/// a loose threshold keeps the fill of the symmetric ordering and iterative
/// refinement absorbs the extra growth.
pub(crate) const PIVOT_THRESHOLD: f64 = 1e-3;

/// Factorizes `matrix`, turning a singular pivot into a configuration error
/// that names the offending field of `system`.
pub(crate) fn factorize_named(system: &BlockSystem, matrix: &SparseMatrix) -> Result<Factorization> {
    // total-pressure rows have an O(1/lambda) diagonal; eliminate them late
    let mut deferred = vec![false; matrix.n_rows()];
    if let Some(f) = system.field_names().iter().position(|n| n == "xi") {
        deferred[system.field_range(f)].iter_mut().for_each(|d| *d = true);
    }
    let opts = FactorOptions {
        pivot_threshold: PIVOT_THRESHOLD,
        ..FactorOptions::default()
    };
    Factorization::with_deferred(matrix, opts, &deferred).map_err(|e| match e {
        Error::Singular { row, .. } => {
            let field = system.field_of(row).unwrap_or("?");
            let hint = match field {
                "u" => "; the displacement needs a Dirichlet boundary part",
                "p" => "; a network without storage needs a pressure Dirichlet boundary part",
                _ => "",
            };
            Error::Configuration(format!("singular system in field {field} (dof {row}){hint}"))
        }
        other => other,
    })
}

/// The eliminated, factorized monolithic operator. Row 3 is assembled in
/// the time-step-multiplied form, so the matrix is independent of `n`.
#[derive(Debug)]
pub struct CoupledOperator {
    system: BlockSystem,
    elimination: DirichletElimination,
    factors: Factorization,
    dt: f64,
}

impl CoupledOperator {
    pub fn system(&self) -> &BlockSystem {
        &self.system
    }

    /// The matrix after Dirichlet elimination.
    pub fn matrix(&self) -> &SparseMatrix {
        self.elimination.matrix()
    }

    pub fn factors(&self) -> &Factorization {
        &self.factors
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

pub fn build_coupled_operator(spec: &ProblemSpec, disc: &Discretization, dt: f64) -> Result<CoupledOperator> {
    if !(dt > 0.0) {
        return Err(Error::Argument(format!("time step must be positive, got {dt}")));
    }
    let p_block = pressure_operator(disc, dt)?;
    let bt = disc.divergence.transpose();
    let ct = disc.coupling.transpose();
    let system = BlockSystem::new(
        &[
            ("u", disc.displacement.n_dofs()),
            ("xi", disc.total.n_dofs()),
            ("p", disc.pressure.n_dofs()),
        ],
        vec![
            (0, 0, disc.elasticity.clone()),
            (0, 1, bt.scaled(-1.0)),
            (1, 0, disc.divergence.clone()),
            (1, 1, disc.scalar_mass.clone()),
            (1, 2, disc.coupling.scaled(-1.0)),
            (2, 1, ct.scaled(-1.0)),
            (2, 2, p_block),
        ],
    )?;
    let constraints = coupled_constraints(spec, disc, &system, 0.0)?;
    let elimination = DirichletElimination::new(system.matrix(), constraints.dofs())?;
    let factors = factorize_named(&system, elimination.matrix())?;
    Ok(CoupledOperator {
        system,
        elimination,
        factors,
        dt,
    })
}

/// `M_p + dt (K + X)`.
pub(crate) fn pressure_operator(disc: &Discretization, dt: f64) -> Result<SparseMatrix> {
    let mut a = SparseMatrix::linear_combination(&[(1.0, &disc.network_mass), (dt, &disc.stiffness), (dt, &disc.exchange)])?;
    let _ = a.mark_symmetric();
    Ok(a)
}

/// `C_alpha^T xi`, the pairing `(1/lambda) (alpha xi, q)`.
pub(crate) fn coupling_transpose(disc: &Discretization, xi: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; disc.pressure.n_dofs()];
    disc.coupling.spmv_transpose_add(xi, &mut out)?;
    Ok(out)
}

fn coupled_constraints(spec: &ProblemSpec, disc: &Discretization, system: &BlockSystem, t: f64) -> Result<Constraints> {
    let mut c = spec.displacement_constraints(&disc.displacement, t)?;
    c.merge(&spec.pressure_constraints(&disc.pressure, t)?.shifted(system.offsets()[2]))?;
    Ok(c)
}

/// Advances `prev` by one step of the operator's time step.
pub fn coupled_step(prev: &SystemState, op: &CoupledOperator, spec: &ProblemSpec, disc: &Discretization) -> Result<(SystemState, f64)> {
    prev.check(disc)?;
    let dt = op.dt;
    let t = prev.time + dt;
    let rhs_u = spec.displacement_load(&disc.displacement, t)?;
    let rhs_xi = vec![0.0; disc.total.n_dofs()];
    let g = spec.pressure_load(&disc.pressure, t)?;
    let mp = disc.network_mass.spmv(&prev.p)?;
    let cx = coupling_transpose(disc, &prev.xi)?;
    let rhs_p: Vec<f64> = (0..mp.len()).map(|i| mp[i] - cx[i] + dt * g[i]).collect();
    let rhs = op.system.join(&[&rhs_u, &rhs_xi, &rhs_p])?;
    let constraints = coupled_constraints(spec, disc, &op.system, t)?;
    let b = op.elimination.rhs(&rhs, &constraints)?;
    let (x, stats) = op.factors.solve_refined(&b, REFINE_STEPS, REFINE_RTOL)?;
    let parts = op.system.split(&x);
    Ok((
        SystemState {
            time: t,
            u: parts[0].to_vec(),
            xi: parts[1].to_vec(),
            p: parts[2].to_vec(),
        },
        stats.relative_residual,
    ))
}
