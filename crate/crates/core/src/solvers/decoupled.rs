//! Iteratively decoupled scheme: a reaction-diffusion solve for the network
//! pressures followed by a generalized Stokes solve for `(u, xi)`.

use super::coupled::{coupling_transpose, factorize_named, pressure_operator, REFINE_RTOL, REFINE_STEPS};
use super::state::{Discretization, SystemState};
use crate::error::{Error, Result};
use crate::fem::{Constraints, DirichletElimination};
use crate::linalg::{cg_solve_from, BlockSystem, Factorization, SparseMatrix};
use crate::model::ProblemSpec;

/// Norms below this are treated as converged to the solver floor.
pub const SOLVER_FLOOR: f64 = 1e-14;

/// When to stop the inner iteration of a time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingRule {
    FixedIters(usize),
    /// Stop once `||xi^k - xi^{k-1}||_L2 <= eps`, or after `max_iters`.
    Tolerance { eps: f64, max_iters: usize },
}

impl StoppingRule {
    pub fn max_iters(self) -> usize {
        match self {
            StoppingRule::FixedIters(k) => k,
            StoppingRule::Tolerance { max_iters, .. } => max_iters,
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            StoppingRule::FixedIters(0) | StoppingRule::Tolerance { max_iters: 0, .. } => {
                Err(Error::Argument("at least one iteration per step is required".into()))
            }
            StoppingRule::Tolerance { eps, .. } if !(eps > 0.0) => Err(Error::Argument(format!("tolerance must be positive, got {eps}"))),
            _ => Ok(()),
        }
    }
}

/// Linear solver for the pressure step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PressureSolver {
    #[default]
    Direct,
    /// Jacobi-preconditioned conjugate gradients, warm-started.
    Cg { tol: f64, max_iter: usize },
}

/// Errors of one iterate against a coupled reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationErrors {
    /// `||e_xi||_L2`.
    pub xi: f64,
    /// `||alpha^T e_p||_L2`.
    pub alpha_p: f64,
    /// `||e_p||_L2` summed over networks.
    pub p: f64,
    /// `sqrt(2 mu) ||eps(e_u)||_L2`.
    pub u_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub xi_increment: f64,
    /// `||xi^k - xi^{k-1}|| / ||xi^{k-1} - xi^{k-2}||` when both exceed the floor.
    pub increment_ratio: Option<f64>,
    pub errors: Option<IterationErrors>,
    /// `||e_xi^k|| / ||e_xi^{k-1}||` when both exceed the floor.
    pub error_ratio: Option<f64>,
    /// Set once the tracked quantity fell below [`SOLVER_FLOOR`].
    pub at_floor: bool,
    /// Largest relative residual of the two linear solves.
    pub residual: f64,
}

/// Per-iteration history of one time step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationTrace {
    /// `||xi^{n,0} - xi_ref||`, available with a reference.
    pub initial_error: Option<f64>,
    pub records: Vec<IterationRecord>,
    /// Set when a tolerance rule ran out of iterations.
    pub warning: Option<String>,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }
}

/// Factorized pressure and Stokes operators for a fixed time step.
#[derive(Debug)]
pub struct DecoupledOperator {
    pressure_elimination: DirichletElimination,
    pressure_factors: Option<Factorization>,
    stokes_system: BlockSystem,
    stokes_elimination: DirichletElimination,
    stokes_factors: Factorization,
    solver: PressureSolver,
    dt: f64,
}

impl DecoupledOperator {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Eliminated `M_p + dt (K + X)`.
    pub fn pressure_matrix(&self) -> &SparseMatrix {
        self.pressure_elimination.matrix()
    }

    /// Eliminated generalized Stokes matrix.
    pub fn stokes_matrix(&self) -> &SparseMatrix {
        self.stokes_elimination.matrix()
    }

    pub fn pressure_factors(&self) -> Option<&Factorization> {
        self.pressure_factors.as_ref()
    }

    pub fn stokes_factors(&self) -> &Factorization {
        &self.stokes_factors
    }

    pub fn factorizations(&self) -> usize {
        1 + usize::from(self.pressure_factors.is_some())
    }
}

pub fn build_decoupled_operator(spec: &ProblemSpec, disc: &Discretization, dt: f64, solver: PressureSolver) -> Result<DecoupledOperator> {
    if !(dt > 0.0) {
        return Err(Error::Argument(format!("time step must be positive, got {dt}")));
    }
    let pressure_system = BlockSystem::new(&[("p", disc.pressure.n_dofs())], vec![(0, 0, pressure_operator(disc, dt)?)])?;
    let pc = spec.pressure_constraints(&disc.pressure, 0.0)?;
    let pressure_elimination = DirichletElimination::new(pressure_system.matrix(), pc.dofs())?;
    let pressure_factors = match solver {
        PressureSolver::Direct => Some(factorize_named(&pressure_system, pressure_elimination.matrix())?),
        PressureSolver::Cg { .. } => None,
    };
    let stokes_system = BlockSystem::new(
        &[("u", disc.displacement.n_dofs()), ("xi", disc.total.n_dofs())],
        vec![
            (0, 0, disc.elasticity.clone()),
            (0, 1, disc.divergence.transpose().scaled(-1.0)),
            (1, 0, disc.divergence.clone()),
            (1, 1, disc.scalar_mass.clone()),
        ],
    )?;
    let uc = spec.displacement_constraints(&disc.displacement, 0.0)?;
    let stokes_elimination = DirichletElimination::new(stokes_system.matrix(), uc.dofs())?;
    let stokes_factors = factorize_named(&stokes_system, stokes_elimination.matrix())?;
    Ok(DecoupledOperator {

        pressure_elimination,
        pressure_factors,
        stokes_system,
        stokes_elimination,
        stokes_factors,
        solver,
        dt,
    })
}

/// Parts of the pressure right-hand side that do not change within a step:
/// `M_p p^{n-1} - C_alpha^T xi^{n-1} + dt G^n`, and the boundary data.
struct StepData {
    time: f64,
    pressure_base: Vec<f64>,
    pressure_constraints: Constraints,
    displacement_load: Vec<f64>,
    displacement_constraints: Constraints,
}

impl StepData {
    fn new(prev: &SystemState, op: &DecoupledOperator, spec: &ProblemSpec, disc: &Discretization) -> Result<Self> {
        prev.check(disc)?;
        let time = prev.time + op.dt;
        let g = spec.pressure_load(&disc.pressure, time)?;
        let mp = disc.network_mass.spmv(&prev.p)?;
        let cx = coupling_transpose(disc, &prev.xi)?;
        let pressure_base = (0..mp.len()).map(|i| mp[i] - cx[i] + op.dt * g[i]).collect();
        Ok(Self {
            time,
            pressure_base,
            pressure_constraints: spec.pressure_constraints(&disc.pressure, time)?,
            displacement_load: spec.displacement_load(&disc.displacement, time)?,
            displacement_constraints: spec.displacement_constraints(&disc.displacement, time)?,
        })
    }
}

fn solve_pressure(op: &DecoupledOperator, data: &StepData, disc: &Discretization, xi_guess: &[f64], warm: &[f64]) -> Result<(Vec<f64>, f64)> {
    let cx = coupling_transpose(disc, xi_guess)?;
    let rhs: Vec<f64> = data.pressure_base.iter().zip(&cx).map(|(b, c)| b + c).collect();
    let b = op.pressure_elimination.rhs(&rhs, &data.pressure_constraints)?;
    match (&op.pressure_factors, op.solver) {
        (Some(f), _) => {
            let (x, s) = f.solve_refined(&b, REFINE_STEPS, REFINE_RTOL)?;
            Ok((x, s.relative_residual))
        }
        (None, PressureSolver::Cg { tol, max_iter }) => {
            let (x, _) = cg_solve_from(op.pressure_elimination.matrix(), &b, Some(warm), tol, max_iter)?;
            let r = op.pressure_elimination.matrix().residual_compensated(&x, &b)?;
            let bn = crate::linalg::norm2(&b);
            Ok((x, if bn > 0.0 { crate::linalg::norm2(&r) / bn } else { 0.0 }))
        }
        (None, PressureSolver::Direct) => unreachable!("direct solver always has factors"),
    }
}

fn solve_stokes(op: &DecoupledOperator, data: &StepData, disc: &Discretization, p: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let rhs_xi = disc.coupling.spmv(p)?;
    let rhs = op.stokes_system.join(&[&data.displacement_load, &rhs_xi])?;
    let b = op.stokes_elimination.rhs(&rhs, &data.displacement_constraints)?;
    let (x, s) = op.stokes_factors.solve_refined(&b, REFINE_STEPS, REFINE_RTOL)?;
    let parts = op.stokes_system.split(&x);
    Ok((parts[0].to_vec(), parts[1].to_vec(), s.relative_residual))
}

/// Step 1: network pressures at `prev.time + dt` for a total-pressure guess.
pub fn decoupled_step1(prev: &SystemState, xi_guess: &[f64], op: &DecoupledOperator, spec: &ProblemSpec, disc: &Discretization) -> Result<Vec<f64>> {
    let data = StepData::new(prev, op, spec, disc)?;
    Ok(solve_pressure(op, &data, disc, xi_guess, &prev.p)?.0)
}

/// Step 2: displacement and total pressure at time `t` for given pressures.
pub fn decoupled_step2(p_new: &[f64], t: f64, op: &DecoupledOperator, spec: &ProblemSpec, disc: &Discretization) -> Result<(Vec<f64>, Vec<f64>)> {
    if p_new.len() != disc.pressure.n_dofs() {
        return Err(Error::Dimension { expected: disc.pressure.n_dofs(), got: p_new.len() });
    }
    let data = StepData {
        time: t,
        pressure_base: Vec::new(),
        pressure_constraints: Constraints::new(),
        displacement_load: spec.displacement_load(&disc.displacement, t)?,
        displacement_constraints: spec.displacement_constraints(&disc.displacement, t)?,
    };
    let (u, xi, _) = solve_stokes(op, &data, disc, p_new)?;
    Ok((u, xi))
}

fn ratio(now: f64, before: f64) -> Option<f64> {
    (now > SOLVER_FLOOR && before > SOLVER_FLOOR).then(|| now / before)
}

/// One time step of the decoupled scheme from the initialization
/// `(u, xi)^{n,0} = (u, xi)^{n-1}`. With a `reference` (the coupled solution
/// at the same time level) the trace records the iteration errors.
pub fn decoupled_time_step(
    prev: &SystemState,
    op: &DecoupledOperator,
    spec: &ProblemSpec,
    disc: &Discretization,
    rule: StoppingRule,
    reference: Option<&SystemState>,
) -> Result<(SystemState, IterationTrace)> {
    rule.validate()?;
    let data = StepData::new(prev, op, spec, disc)?;
    let error_of = |s: &SystemState| -> Result<IterationErrors> {
        let r = reference.expect("called with a reference");
        let dxi: Vec<f64> = s.xi.iter().zip(&r.xi).map(|(a, b)| a - b).collect();
        let dp: Vec<f64> = s.p.iter().zip(&r.p).map(|(a, b)| a - b).collect();
        let du: Vec<f64> = s.u.iter().zip(&r.u).map(|(a, b)| a - b).collect();
        Ok(IterationErrors {
            xi: disc.l2_p1(&dxi),
            alpha_p: disc.l2_p1(&disc.alpha_combination(&dp)),
            p: disc.l2_networks(&dp),
            u_energy: disc.energy_norm(&du),
        })
    };
    let mut state = SystemState { time: data.time, ..prev.clone() };
    let mut trace = IterationTrace {
        initial_error: reference.map(|_| error_of(&state).map(|e| e.xi)).transpose()?,
        ..Default::default()
    };
    let mut last_increment = f64::INFINITY;
    let mut last_error = trace.initial_error;
    for k in 1..=rule.max_iters() {
        let (p, rp) = solve_pressure(op, &data, disc, &state.xi, &state.p)?;
        let (u, xi, rs) = solve_stokes(op, &data, disc, &p)?;
        let dxi: Vec<f64> = xi.iter().zip(&state.xi).map(|(a, b)| a - b).collect();
        let increment = disc.l2_p1(&dxi);
        state = SystemState { time: data.time, u, xi, p };
        let errors = reference.map(|_| error_of(&state)).transpose()?;
        let error_ratio = match (errors, last_error) {
            (Some(e), Some(prev_e)) => ratio(e.xi, prev_e),
            _ => None,
        };
        let tracked = errors.map_or(increment, |e| e.xi);
        trace.records.push(IterationRecord {
            k,
            xi_increment: increment,
            increment_ratio: if k > 1 { ratio(increment, last_increment) } else { None },
            errors,
            error_ratio,
            at_floor: tracked <= SOLVER_FLOOR,
            residual: rp.max(rs),
        });
        last_increment = increment;
        last_error = errors.map(|e| e.xi);
        if let StoppingRule::Tolerance { eps, max_iters } = rule {
            if increment <= eps {
                break;
            }
            if k == max_iters {
                trace.warning = Some(format!(
                    "tolerance {eps:e} not reached after {max_iters} iterations at t = {} (last increment {increment:e})",
                    data.time
                ));
            }
        }
    }
    Ok((state, trace))
}
