//! Measured contraction of the decoupled iteration within one time step.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{contraction_factor, ProblemSpec};
use crate::solvers::{build_coupled_operator, build_decoupled_operator, coupled_step, decoupled_time_step, Discretization, PressureSolver, StoppingRule};

/// Errors at or below this are indistinguishable from solver roundoff.
pub const CONTRACTION_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionPoint {
    pub k: usize,
    /// `||xi^k - xi_ref||_L2`.
    pub xi_error: f64,
    /// `||alpha^T (p^k - p_ref)||_L2`.
    pub alpha_p_error: f64,
    /// `xi_error(k) / xi_error(k-1)`, while both are above the floor.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionSeries {
    /// Predicted factor `C*` for the material.
    pub bound: f64,
    /// `||xi^{n-1} - xi_ref||`, the error of the initial guess.
    pub initial_error: f64,
    /// Iterates `k = 1, 2, ...` up to and including the first one at the floor.
    pub points: Vec<ContractionPoint>,
    /// First `k` with `xi_error <= CONTRACTION_FLOOR`.
    pub floor_reached_at: Option<usize>,
}

impl ContractionSeries {
    pub fn max_ratio(&self) -> Option<f64> {
        self.points.iter().filter_map(|p| p.ratio).reduce(f64::max)
    }

    /// Iterations whose `||e_xi|| > ||alpha^T e_p|| + slack`.
    pub fn ordering_violations(&self, slack: f64) -> Vec<usize> {
        self.points.iter().filter(|p| p.xi_error > p.alpha_p_error + slack).map(|p| p.k).collect()
    }

    /// Iterations whose ratio exceeds `limit`.
    pub fn ratio_violations(&self, limit: f64) -> Vec<usize> {
        self.points.iter().filter(|p| p.ratio.is_some_and(|r| r > limit)).map(|p| p.k).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,xi_error[L2],alpha_p_error[L2],ratio[1],bound[1]\n");
        let _ = writeln!(s, "0,{:.6e},,,{:.6}", self.initial_error, self.bound);
        for p in &self.points {
            let r = p.ratio.map(|r| format!("{r:.6}")).unwrap_or_default();
            let _ = writeln!(s, "{},{:.6e},{:.6e},{},{:.6}", p.k, p.xi_error, p.alpha_p_error, r, self.bound);
        }
        s
    }
}

/// First time step of `spec` with step `dt`: the coupled solution is the
/// reference and the decoupled iterates start from the initial state. At most
/// `k_max` iterations; the series ends at the first iterate on the floor.
pub fn contraction_series(spec: &ProblemSpec, dt: f64, k_max: usize) -> Result<ContractionSeries> {
    if k_max == 0 {
        return Err(Error::Argument("k_max must be at least 1".into()));
    }
    let bound = contraction_factor(&spec.params)?;
    let disc = Discretization::new(spec)?;
    let initial = disc.initial_state(spec)?;
    let coupled = build_coupled_operator(spec, &disc, dt)?;
    let (reference, _) = coupled_step(&initial, &coupled, spec, &disc)?;
    let op = build_decoupled_operator(spec, &disc, dt, PressureSolver::Direct)?;
    let (_, trace) = decoupled_time_step(&initial, &op, spec, &disc, StoppingRule::FixedIters(k_max), Some(&reference))?;
    let initial_error = trace.initial_error.expect("reference given");
    let mut points = Vec::new();
    let mut floor_reached_at = None;
    let mut prev = initial_error;
    for rec in &trace.records {
        let e = rec.errors.expect("reference given");
        let ratio = (prev > CONTRACTION_FLOOR && e.xi > CONTRACTION_FLOOR).then(|| e.xi / prev);
        points.push(ContractionPoint {
            k: rec.k,
            xi_error: e.xi,
            alpha_p_error: e.alpha_p,
            ratio,
        });
        prev = e.xi;
        if e.xi <= CONTRACTION_FLOOR {
            floor_reached_at = Some(rec.k);
            break;
        }
    }
    Ok(ContractionSeries {
        bound,
        initial_error,
        points,
        floor_reached_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;
    use crate::model::ManufacturedCase;
    use crate::verify::ALL_SIDES;
    use std::sync::Arc;

    fn spec(c: f64) -> ProblemSpec {
        let case = ManufacturedCase::accuracy(0.3, 1.0, c).unwrap();
        case.problem(Arc::new(unit_square_mesh(4).unwrap()), 0.01, &ALL_SIDES).unwrap()
    }

    #[test]
    fn initial_error_is_first_step_change_of_reference() {
        let s = spec(1.0);
        let dt = 2e-3;
        let series = contraction_series(&s, dt, 3).unwrap();
        let disc = Discretization::new(&s).unwrap();
        let init = disc.initial_state(&s).unwrap();
        let op = build_coupled_operator(&s, &disc, dt).unwrap();
        let (r, _) = coupled_step(&init, &op, &s, &disc).unwrap();
        let d: Vec<f64> = init.xi.iter().zip(&r.xi).map(|(a, b)| a - b).collect();
        assert!((series.initial_error - disc.l2_p1(&d)).abs() <= 1e-15 * series.initial_error.max(1.0));
        assert_eq!(series.points.len(), 3);
        assert!((series.bound - 0.77612).abs() < 5e-6);
    }

    #[test]
    fn contracts_and_orders_errors() {
        let series = contraction_series(&spec(1.0), 2e-3, 200).unwrap();
        assert!(series.floor_reached_at.is_some(), "{:?}", series.points.last());
        assert!(series.ratio_violations(series.bound + 0.05).is_empty());
        assert!(series.ordering_violations(1e-12).is_empty());
        let csv = series.to_csv();
        assert!(csv.starts_with("k,"));
        assert_eq!(csv.lines().count(), series.points.len() + 2);
    }

    #[test]
    fn zero_iterations_rejected() {
        assert!(contraction_series(&spec(1.0), 2e-3, 0).is_err());
    }
}
