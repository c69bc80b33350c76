//! Time integration: the monolithic backward-Euler scheme and the
//! iteratively decoupled scheme.

mod coupled;
mod decoupled;
mod run;
mod state;

pub use coupled::{build_coupled_operator, coupled_step, CoupledOperator};
pub use decoupled::{
    build_decoupled_operator, decoupled_step1, decoupled_step2, decoupled_time_step, DecoupledOperator, IterationErrors,
    IterationRecord, IterationTrace, PressureSolver, StoppingRule, SOLVER_FLOOR,
};
pub use run::{run, run_from, ProbeSample, ProbeValue, Probes, Retention, RunOutput, Scheme, SchemeConfig, SolveReport, StepReport};
pub use state::{Discretization, SystemState};
