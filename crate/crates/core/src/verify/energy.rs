//! Discrete energy balance of the coupled scheme, and the divergence/strain
//! inequality.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fem::{quadrature_rule, ElementGeometry};
use crate::linalg::dot;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::{BoundaryTag, Mesh};
use crate::model::{BoundaryProgram, DisplacementBc, MpetParameters, PressureBc, ProblemSpec};
use crate::solvers::{Discretization, SystemState};

/// Time-constant data for the energy balance on the unit square: Dirichlet
/// sides Gamma2..Gamma4 (zero data) and loads on Gamma1.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantLoads {
    pub body_force: [f64; 2],
    pub sources: Vec<f64>,
    pub traction: [f64; 2],
    pub fluxes: Vec<f64>,
    /// Amplitude of `p_0` in each network.
    pub initial_pressure: Vec<f64>,
}

impl ConstantLoads {
    /// Reproducible pseudo-random loads in `[-1, 1]`.
    pub fn seeded(seed: u64, networks: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut next = || rng.gen_range(-1.0..=1.0);
        Self {
            body_force: [next(), next()],
            sources: (0..networks).map(|_| next()).collect(),
            traction: [next(), next()],
            fluxes: (0..networks).map(|_| next()).collect(),
            initial_pressure: (0..networks).map(|_| next()).collect(),
        }
    }

    pub fn problem(&self, mesh: Arc<Mesh>, params: MpetParameters, final_time: f64) -> Result<ProblemSpec> {
        let n = params.networks();
        for (name, v) in [("sources", &self.sources), ("fluxes", &self.fluxes), ("initial_pressure", &self.initial_pressure)] {
            if v.len() != n {
                return Err(Error::Argument(format!("{name} has {} entries for {n} networks", v.len())));
            }
        }
        let mut boundary = BoundaryProgram::homogeneous_dirichlet(n, &[BoundaryTag::Gamma2, BoundaryTag::Gamma3, BoundaryTag::Gamma4]);
        let t = self.traction;
        boundary.set_displacement(BoundaryTag::Gamma1, DisplacementBc::Traction(Arc::new(move |_, _, _| t)));
        for (i, &q) in self.fluxes.iter().enumerate() {
            boundary.set_pressure(i, BoundaryTag::Gamma1, PressureBc::Flux(Arc::new(move |_, _, _| q)))?;
        }
        let f = self.body_force;
        let g = self.sources.clone();
        let a = self.initial_pressure.clone();
        Ok(ProblemSpec::new(mesh, params, boundary, final_time)?
            .with_body_force(Arc::new(move |_, _| f))
            .with_source(Arc::new(move |_, _| g.clone()))
            .with_initial_pressure(Arc::new(move |x, _| {
                let shape = (0.5 * PI * x[0]).sin() * (PI * x[1]).sin();
                a.iter().map(|v| v * shape).collect()
            })))
    }
}

/// Squared terms may dip this far below zero through roundoff.
pub const SQUARE_FLOOR: f64 = -1e-14;

/// Per-step stored energy `J^n`, accumulated dissipation `S^n` and the
/// balance residual `J^n + S^n - J^0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyLedger {
    pub time: Vec<f64>,
    pub stored: Vec<f64>,
    pub dissipated: Vec<f64>,
    pub residual: Vec<f64>,
    /// Smallest squared summand seen while accumulating `S`.
    pub min_square: f64,
}

impl EnergyLedger {
    pub fn steps(&self) -> usize {
        self.time.len().saturating_sub(1)
    }

    /// `|J^l + S^l - J^0| / (|J^0| + |S^l| + 1)` at the last step.
    pub fn relative_residual(&self) -> f64 {
        let (Some(r), Some(s), Some(j0)) = (self.residual.last(), self.dissipated.last(), self.stored.first()) else {
            return 0.0;
        };
        r.abs() / (j0.abs() + s.abs() + 1.0)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,t[s],stored_J[J],dissipated_S[J],residual[J]\n");
        for n in 0..self.time.len() {
            let _ = writeln!(
                s,
                "{n},{:.6e},{:.12e},{:.12e},{:.6e}",
                self.time[n], self.stored[n], self.dissipated[n], self.residual[n]
            );
        }
        s
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn same(a: &[f64], b: &[f64]) -> bool {
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * scale)
}

/// Pressure boundary values below this count as zero; data such as
/// `sin(pi x)` on `x = 1` only vanish up to rounding.
const PRESSURE_ZERO: f64 = 1e-12;

/// Checks that loads and boundary data do not change over `[t0, t1]` and
/// that the pressure Dirichlet data vanish.
pub fn check_energy_preconditions(spec: &ProblemSpec, disc: &Discretization, t0: f64, t1: f64) -> Result<()> {
    let times = [t0, 0.5 * (t0 + t1), t1];
    let f0 = spec.displacement_load(&disc.displacement, t0)?;
    let g0 = spec.pressure_load(&disc.pressure, t0)?;
    let uc0: Vec<(usize, f64)> = spec.displacement_constraints(&disc.displacement, t0)?.iter().collect();
    for &t in &times {
        if !same(&f0, &spec.displacement_load(&disc.displacement, t)?) {
            return Err(Error::Precondition(format!("body force or traction changes between t = {t0} and t = {t}; the balance needs time-constant loads")));
        }
        if !same(&g0, &spec.pressure_load(&disc.pressure, t)?) {
            return Err(Error::Precondition(format!("source or flux changes between t = {t0} and t = {t}; the balance needs time-constant loads")));
        }
        let uc: Vec<(usize, f64)> = spec.displacement_constraints(&disc.displacement, t)?.iter().collect();
        if uc != uc0 {
            return Err(Error::Precondition(format!("displacement boundary data changes at t = {t}")));
        }
        if let Some((dof, v)) = spec.pressure_constraints(&disc.pressure, t)?.iter().find(|(_, v)| v.abs() > PRESSURE_ZERO) {
            return Err(Error::Precondition(format!("pressure boundary data must vanish, dof {dof} has {v} at t = {t}")));
        }
    }
    Ok(())
}

/// Energy balance along a uniformly stepped coupled trajectory starting from
/// a consistent initial state (`u_0 = 0` with `xi_0 = alpha^T p_0`, or any
/// state satisfying the constraint equation).
pub fn energy_identity_residual(trajectory: &[SystemState], spec: &ProblemSpec, disc: &Discretization) -> Result<EnergyLedger> {
    let Some(first) = trajectory.first() else {
        return Err(Error::Argument("empty trajectory".into()));
    };
    for s in trajectory {
        s.check(disc)?;
    }
    let last = trajectory.last().expect("nonempty");
    check_energy_preconditions(spec, disc, first.time, last.time.max(first.time))?;
    let f = spec.displacement_load(&disc.displacement, first.time)?;
    let g = spec.pressure_load(&disc.pressure, first.time)?;
    let storage = disc.coefficients.storage.clone();
    let n1 = disc.total.n_dofs();

    // each returns a list of nonnegative pieces: mu|eps u|^2, |w|^2/(2 lambda), |S p|^2/2
    let quadratic = |u: &[f64], xi: &[f64], p: &[f64]| -> Result<[f64; 3]> {
        let w = diff(&disc.alpha_combination(p), xi);
        let mut sp = 0.0;
        for (c, chunk) in storage.iter().zip(p.chunks(n1)) {
            sp += c * disc.unit_mass.bilinear(chunk, chunk)?;
        }
        Ok([
            0.5 * disc.elasticity.bilinear(u, u)?,
            0.5 * disc.scalar_mass.bilinear(&w, &w)?,
            0.5 * sp,
        ])
    };
    let stored = |s: &SystemState| -> Result<f64> {
        let q = quadratic(&s.u, &s.xi, &s.p)?;
        Ok(q.iter().sum::<f64>() - dot(&f, &s.u))
    };

    let mut ledger = EnergyLedger {
        min_square: 0.0,
        ..Default::default()
    };
    let j0 = stored(first)?;
    ledger.time.push(first.time);
    ledger.stored.push(j0);
    ledger.dissipated.push(0.0);
    ledger.residual.push(0.0);
    let mut s_acc = 0.0;
    for pair in trajectory.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let dt = b.time - a.time;
        if !(dt > 0.0) {
            return Err(Error::Argument(format!("trajectory times must increase, got {} then {}", a.time, b.time)));
        }
        // increments squared: dt^2 |d_t .|^2 terms times dt / dt
        let inc = quadratic(&diff(&b.u, &a.u), &diff(&b.xi, &a.xi), &diff(&b.p, &a.p))?;
        let k = disc.stiffness.bilinear(&b.p, &b.p)?;
        let x = disc.exchange.bilinear(&b.p, &b.p)?;
        for v in inc.iter().chain([k, x].iter()) {
            ledger.min_square = ledger.min_square.min(*v);
        }
        s_acc += inc.iter().sum::<f64>() + dt * (k + x - dot(&g, &b.p));
        let j = stored(b)?;
        ledger.time.push(b.time);
        ledger.stored.push(j);
        ledger.dissipated.push(s_acc);
        ledger.residual.push(j + s_acc - j0);
    }
    if ledger.min_square < SQUARE_FLOOR {
        return Err(Error::Structure(format!("a squared dissipation term is negative: {:e}", ledger.min_square)));
    }
    Ok(ledger)
}

/// `(||div u||_L2, ||eps(u)||_L2)` for a P2 displacement.
pub fn divergence_and_strain(u: &[f64], disc: &Discretization) -> Result<(f64, f64)> {
    if u.len() != disc.displacement.n_dofs() {
        return Err(Error::Dimension {
            expected: disc.displacement.n_dofs(),
            got: u.len(),
        });
    }
    // gradients of P2 functions are linear, degree 2 is exact for the squares
    let rule = quadrature_rule(2)?;
    let (mut div, mut eps) = (0.0, 0.0);
    for k in 0..disc.mesh.n_triangles() {
        let geom = ElementGeometry::new(disc.mesh.triangle_coords(k));
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let w = w * 2.0 * geom.area;
            let (_, g) = disc.displacement.eval_in_element(u, k, &geom, *l);
            let d = g[0][0] + g[1][1];
            let off = 0.5 * (g[0][1] + g[1][0]);
            div += w * d * d;
            eps += w * (g[0][0] * g[0][0] + g[1][1] * g[1][1] + 2.0 * off * off);
        }
    }
    Ok((div.sqrt(), eps.sqrt()))
}

/// `||div u|| <= sqrt(2) ||eps(u)||` up to roundoff.
pub fn divergence_bound_holds(u: &[f64], disc: &Discretization) -> Result<bool> {
    let (d, e) = divergence_and_strain(u, disc)?;
    Ok(d <= std::f64::consts::SQRT_2 * e * (1.0 + 1e-12) + 1e-300)
}
