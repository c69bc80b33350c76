use crate::error::{Error, Result};
use crate::fem::{quadrature_rule, ElementGeometry, LOAD_QUADRATURE};
use crate::model::ManufacturedCase;
use crate::solvers::{Discretization, SystemState};

/// Errors of one field on one mesh level.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    /// `1/h` of the unit-square mesh.
    pub level: usize,
    pub field: &'static str,
    pub l2: f64,
    /// Full `H1` norm.
    pub h1: f64,
    pub h1_semi: f64,
    pub order_l2: Option<f64>,
    pub order_h1: Option<f64>,
    pub order_h1_semi: Option<f64>,
}

impl ErrorRecord {
    fn new(level: usize, field: &'static str, l2_sq: f64, semi_sq: f64) -> Self {
        Self {
            level,
            field,
            l2: l2_sq.sqrt(),
            h1: (l2_sq + semi_sq).sqrt(),
            h1_semi: semi_sq.sqrt(),
            order_l2: None,
            order_h1: None,
            order_h1_semi: None,
        }
    }
}

/// `log2(e_coarse / e_fine)` for a halved mesh size.
pub fn observed_order(e_coarse: f64, e_fine: f64) -> Result<f64> {
    observed_order_with_ratio(e_coarse, e_fine, 2.0)
}

/// Order for a mesh-size ratio `h_coarse / h_fine = ratio`.
pub fn observed_order_with_ratio(e_coarse: f64, e_fine: f64, ratio: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0) {
        return Err(Error::Argument(format!("errors must be positive, got {e_coarse} and {e_fine}")));
    }
    if !(ratio > 1.0) {
        return Err(Error::Argument(format!("refinement ratio must exceed 1, got {ratio}")));
    }
    Ok((e_coarse / e_fine).ln() / ratio.ln())
}

/// `L2` and `H1` errors of `u`, `xi` and every network pressure against the
/// manufactured fields at time `t`, by element quadrature of degree 6.
pub fn error_norms(state: &SystemState, disc: &Discretization, case: &ManufacturedCase, t: f64, level: usize) -> Result<Vec<ErrorRecord>> {
    state.check(disc)?;
    if (state.time - t).abs() > 1e-12 * t.abs().max(1.0) {
        return Err(Error::Argument(format!("state is at t = {}, errors requested at t = {t}", state.time)));
    }
    if disc.networks() != 2 {
        return Err(Error::Argument("the manufactured solution has 2 networks".into()));
    }
    let rule = quadrature_rule(LOAD_QUADRATURE)?;
    // squared L2 and seminorm errors of u, xi, p1, p2
    let mut acc = [[0.0f64; 2]; 4];
    let mesh = &disc.mesh;
    for k in 0..mesh.n_triangles() {
        let geom = ElementGeometry::new(mesh.triangle_coords(k));
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let w = w * 2.0 * geom.area;
            let x = geom.point(*l);
            let (uh, guh) = disc.displacement.eval_in_element(&state.u, k, &geom, *l);
            let (xh, gxh) = disc.total.eval_in_element(&state.xi, k, &geom, *l);
            let (ph, gph) = disc.pressure.eval_in_element(&state.p, k, &geom, *l);
            let u = case.displacement(x, t);
            let gu = case.displacement_gradient(x, t);
            for c in 0..2 {
                acc[0][0] += w * (uh[c] - u[c]).powi(2);
                acc[0][1] += w * ((guh[c][0] - gu[c][0]).powi(2) + (guh[c][1] - gu[c][1]).powi(2));
            }
            let gx = case.total_pressure_gradient(x, t);
            acc[1][0] += w * (xh[0] - case.total_pressure(x, t)).powi(2);
            acc[1][1] += w * ((gxh[0][0] - gx[0]).powi(2) + (gxh[0][1] - gx[1]).powi(2));
            let p = case.pressures(x, t);
            let gp = case.pressure_gradients(x, t);
            for i in 0..2 {
                acc[2 + i][0] += w * (ph[i] - p[i]).powi(2);
                acc[2 + i][1] += w * ((gph[i][0] - gp[i][0]).powi(2) + (gph[i][1] - gp[i][1]).powi(2));
            }
        }
    }
    Ok(["u", "xi", "p1", "p2"]
        .iter()
        .zip(acc)
        .map(|(name, [l2, semi])| ErrorRecord::new(level, name, l2, semi))
        .collect())
}

/// Fills the order columns of records sorted by increasing level.
pub fn attach_orders(records: &mut [ErrorRecord]) {
    for i in 0..records.len() {
        let (before, rest) = records.split_at_mut(i);
        let fine = &mut rest[0];
        let Some(coarse) = before.iter().rev().find(|r| r.field == fine.field && r.level < fine.level) else {
            continue;
        };
        let ratio = fine.level as f64 / coarse.level as f64;
        fine.order_l2 = observed_order_with_ratio(coarse.l2, fine.l2, ratio).ok();
        fine.order_h1 = observed_order_with_ratio(coarse.h1, fine.h1, ratio).ok();
        fine.order_h1_semi = observed_order_with_ratio(coarse.h1_semi, fine.h1_semi, ratio).ok();
    }
}
