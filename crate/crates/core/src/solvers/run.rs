//! Time loop, probes and run statistics.

use std::time::{Duration, Instant};

use super::coupled::{build_coupled_operator, coupled_step, CoupledOperator};
use super::decoupled::{build_decoupled_operator, decoupled_time_step, DecoupledOperator, IterationTrace, PressureSolver, StoppingRule};
use super::state::{Discretization, SystemState};
use crate::error::{Error, Result};
use crate::fem::ElementGeometry;
use crate::model::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Coupled,
    Decoupled(StoppingRule),
}

/// What a run keeps besides the final state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Retention {
    FinalOnly,
    #[default]
    ProbesOnly,
    /// Every state, including the initial one.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub n_steps: usize,
    pub pressure_solver: PressureSolver,
    pub retention: Retention,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, dt: f64, n_steps: usize) -> Self {
        Self {
            scheme,
            dt,
            n_steps,
            pressure_solver: PressureSolver::Direct,
            retention: Retention::default(),
        }
    }

    /// Uniform steps covering `[0, final_time]`; `final_time / dt` must be
    /// an integer up to rounding.
    pub fn to_final_time(scheme: Scheme, final_time: f64, dt: f64) -> Result<Self> {
        let steps = (final_time / dt).round();
        if !(dt > 0.0) || ((steps * dt - final_time).abs() > 1e-9 * final_time.max(1.0)) {
            return Err(Error::Argument(format!("final time {final_time} is not a multiple of dt = {dt}")));
        }
        Ok(Self::new(scheme, dt, steps as usize))
    }

    pub fn with_retention(mut self, retention: Retention) -> Self {
        self.retention = retention;
        self
    }

    pub fn with_pressure_solver(mut self, solver: PressureSolver) -> Self {
        self.pressure_solver = solver;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Argument(format!("time step must be positive, got {}", self.dt)));
        }
        if let Scheme::Decoupled(rule) = self.scheme {
            rule.validate()?;
        }
        Ok(())
    }
}

/// Statistics of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub time: f64,
    /// Largest relative residual of the step's linear solves.
    pub residual: f64,
    pub wall: Duration,
    /// Inner iterations, empty for the coupled scheme.
    pub trace: Option<IterationTrace>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    pub steps: Vec<StepReport>,
    /// Wall time spent assembling and factorizing.
    pub setup: Duration,
    pub total: Duration,
    pub factorizations: usize,
    pub solves: usize,
    pub warnings: Vec<String>,
}

/// Field values at one probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeValue {
    pub u: [f64; 2],
    pub xi: f64,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSample {
    pub time: f64,
    /// One entry per probe, in the order given.
    pub values: Vec<ProbeValue>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_state: SystemState,
    pub trajectory: Vec<SystemState>,
    pub probes: Vec<ProbeSample>,
    pub report: SolveReport,
}

/// Pre-located probe points.
#[derive(Debug, Clone)]
pub struct Probes {
    located: Vec<(usize, [f64; 3], ElementGeometry)>,
}

impl Probes {
    pub fn new(disc: &Discretization, points: &[[f64; 2]]) -> Result<Self> {
        let outside: Vec<String> = points
            .iter()
            .filter(|p| disc.mesh.locate(**p).is_none())
            .map(|p| format!("({}, {})", p[0], p[1]))
            .collect();
        if !outside.is_empty() {
            return Err(Error::Argument(format!("probe points outside the mesh: {}", outside.join(", "))));
        }
        let located = points
            .iter()
            .map(|p| {
                let (k, l) = disc.mesh.locate(*p).expect("checked above");
                (k, l, ElementGeometry::new(disc.mesh.triangle_coords(k)))
            })
            .collect();
        Ok(Self { located })
    }

    pub fn len(&self) -> usize {
        self.located.len()
    }

    pub fn is_empty(&self) -> bool {
        self.located.is_empty()
    }

    pub fn sample(&self, disc: &Discretization, state: &SystemState) -> ProbeSample {
        let values = self
            .located
            .iter()
            .map(|(k, l, g)| {
                let u = disc.displacement.eval_in_element(&state.u, *k, g, *l).0;
                let xi = disc.total.eval_in_element(&state.xi, *k, g, *l).0[0];
                let p = disc.pressure.eval_in_element(&state.p, *k, g, *l).0;
                ProbeValue { u: [u[0], u[1]], xi, p }
            })
            .collect();
        ProbeSample { time: state.time, values }
    }
}

enum Operator {
    Coupled(CoupledOperator),
    Decoupled(DecoupledOperator, StoppingRule),
}

/// Runs `config.n_steps` steps from the initial data of `spec`.
pub fn run(spec: &ProblemSpec, config: &SchemeConfig, probes: &[[f64; 2]]) -> Result<RunOutput> {
    let start = Instant::now();
    config.validate()?;
    let disc = Discretization::new(spec)?;
    let probes = Probes::new(&disc, probes)?;
    let initial = disc.initial_state(spec)?;
    run_from(spec, &disc, initial, config, &probes, start)
}

/// Like [`run`], reusing an existing discretization and start state.
pub fn run_from(
    spec: &ProblemSpec,
    disc: &Discretization,
    initial: SystemState,
    config: &SchemeConfig,
    probes: &Probes,
    start: Instant,
) -> Result<RunOutput> {
    config.validate()?;
    initial.check(disc)?;
    let op = if config.n_steps == 0 {
        None
    } else {
        Some(match config.scheme {
            Scheme::Coupled => Operator::Coupled(build_coupled_operator(spec, disc, config.dt)?),
            Scheme::Decoupled(rule) => Operator::Decoupled(build_decoupled_operator(spec, disc, config.dt, config.pressure_solver)?, rule),
        })
    };
    let mut report = SolveReport {
        setup: start.elapsed(),
        factorizations: match &op {
            None => 0,
            Some(Operator::Coupled(_)) => 1,
            Some(Operator::Decoupled(d, _)) => d.factorizations(),
        },
        ..Default::default()
    };
    let keep_probes = config.retention != Retention::FinalOnly;
    let mut samples = Vec::new();
    if keep_probes && !probes.is_empty() {
        samples.push(probes.sample(disc, &initial));
    }
    let mut trajectory = Vec::new();
    if config.retention == Retention::Full {
        trajectory.push(initial.clone());
    }
    let mut state = initial;
    for _ in 0..config.n_steps {
        let t0 = Instant::now();
        let (next, residual, trace) = match op.as_ref().expect("steps imply an operator") {
            Operator::Coupled(c) => {
                let (s, r) = coupled_step(&state, c, spec, disc)?;
                (s, r, None)
            }
            Operator::Decoupled(d, rule) => {
                let (s, tr) = decoupled_time_step(&state, d, spec, disc, *rule, None)?;
                let r = tr.records.iter().map(|x| x.residual).fold(0.0, f64::max);
                if let Some(w) = &tr.warning {
                    report.warnings.push(w.clone());
                }
                (s, r, Some(tr))
            }
        };
        state = next;
        report.steps.push(StepReport {
            time: state.time,
            residual,
            wall: t0.elapsed(),
            trace,
        });
        if keep_probes && !probes.is_empty() {
            samples.push(probes.sample(disc, &state));
        }
        if config.retention == Retention::Full {
            trajectory.push(state.clone());
        }
    }
    report.solves = match &op {
        None => 0,
        Some(Operator::Coupled(c)) => c.factors().solve_count(),
        Some(Operator::Decoupled(d, _)) => {
            d.stokes_factors().solve_count() + d.pressure_factors().map_or(0, |f| f.solve_count())
        }
    };
    report.total = start.elapsed();
    Ok(RunOutput {
        final_state: state,
        trajectory,
        probes: samples,
        report,
    })
}
