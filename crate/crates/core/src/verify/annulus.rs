//! Coupled vs decoupled runs of the physiological preset on an annulus.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::mesh::{annulus_mesh, BoundaryTag, Mesh};
use crate::model::{PhysiologicalPreset, PressureBc, MMHG_TO_PA};
use crate::solvers::{run, Retention, RunOutput, Scheme, SchemeConfig, StoppingRule, SystemState};

/// Probe traces are compared from this time on, once the start-up transient
/// has passed.
pub const COMPARE_AFTER: f64 = 1.0;

/// Envelope of the Dirichlet data of each network over `[0, T]`. A network
/// without Dirichlet data gets its initial value.
pub fn boundary_envelopes(preset: &PhysiologicalPreset) -> Vec<(f64, f64)> {
    let n = preset.params.networks();
    let sides = [(BoundaryTag::GammaS, preset.r_outer), (BoundaryTag::GammaV, preset.r_inner)];
    (0..n)
        .map(|i| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (tag, r) in sides {
                if let Some(PressureBc::Fixed(g)) = preset.boundary.pressure(i, tag) {
                    for k in 0..=600 {
                        let v = g([r, 0.0], preset.final_time * k as f64 / 600.0);
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
            }
            if lo > hi {
                (preset.initial_pressure[i], preset.initial_pressure[i])
            } else {
                (lo, hi)
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct AnnulusComparison {
    pub mesh: Arc<Mesh>,
    pub coupled: RunOutput,
    pub decoupled: RunOutput,
    pub coupled_wall: Duration,
    pub decoupled_wall: Duration,
    /// Largest relative probe difference after `COMPARE_AFTER`, for `|u|`
    /// then each pressure, taken relative to the coupled value.
    pub max_relative: Vec<f64>,
    /// Boundary-data envelope of each network.
    pub envelopes: Vec<(f64, f64)>,
    /// Range of each pressure over all probe samples of both runs.
    pub ranges: Vec<(f64, f64)>,
    pub finite: bool,
}

impl AnnulusComparison {
    pub fn agreement_holds(&self, tol: f64) -> bool {
        self.max_relative.iter().all(|d| *d <= tol)
    }

    pub fn decoupled_faster(&self) -> bool {
        self.decoupled_wall < self.coupled_wall
    }

    /// Networks whose range leaves the envelope widened by `slack` times its
    /// ends.
    pub fn envelope_violations(&self, slack: f64) -> Vec<usize> {
        self.envelopes
            .iter()
            .zip(&self.ranges)
            .enumerate()
            .filter(|(_, ((lo, hi), (a, b)))| *a < lo - slack * lo.abs() || *b > hi + slack * hi.abs())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "wall time: coupled {:.2?}, decoupled {:.2?}", self.coupled_wall, self.decoupled_wall);
        let _ = writeln!(s, "max relative probe difference after t = {COMPARE_AFTER} s: |u| {:.3e}", self.max_relative[0]);
        for (i, d) in self.max_relative[1..].iter().enumerate() {
            let (lo, hi) = self.envelopes[i];
            let (a, b) = self.ranges[i];
            let _ = writeln!(
                s,
                "p{}: difference {:.3e}, range [{:.2}, {:.2}] mmHg, boundary envelope [{:.2}, {:.2}] mmHg",
                i + 1,
                d,
                a / MMHG_TO_PA,
                b / MMHG_TO_PA,
                lo / MMHG_TO_PA,
                hi / MMHG_TO_PA
            );
        }
        s
    }
}

/// Probe traces as CSV: `time`, then per probe `|u|` in mm and each
/// pressure in Pa and in mmHg.
pub fn probe_csv(output: &RunOutput, n_probes: usize, networks: usize) -> String {
    let mut s = String::from("time[s]");
    for j in 0..n_probes {
        let _ = write!(s, ",probe{j}_u_magnitude[mm]");
        for i in 1..=networks {
            let _ = write!(s, ",probe{j}_p{i}[Pa],probe{j}_p{i}[mmHg]");
        }
    }
    s.push('\n');
    for sample in &output.probes {
        let _ = write!(s, "{:.6}", sample.time);
        for v in &sample.values {
            let _ = write!(s, ",{:.6e}", v.u[0].hypot(v.u[1]));
            for p in &v.p {
                let _ = write!(s, ",{:.6},{:.6}", p, p / MMHG_TO_PA);
            }
        }
        s.push('\n');
    }
    s
}

/// Vertex values of a state as CSV: coordinates in mm, displacement in mm,
/// total and network pressures in Pa.
pub fn vertex_csv(state: &SystemState, mesh: &Mesh) -> Result<String> {
    let nv = mesh.n_vertices();
    let n_nodes = nv + mesh.n_edges();
    if state.u.len() != 2 * n_nodes || state.xi.len() != nv || state.p.is_empty() || state.p.len() % nv != 0 {
        return Err(Error::Argument("state does not match the mesh".into()));
    }
    let networks = state.p.len() / nv;
    let mut s = String::from("x[mm],y[mm],u_x[mm],u_y[mm],xi[Pa]");
    for i in 1..=networks {
        let _ = write!(s, ",p{i}[Pa]");
    }
    s.push('\n');
    for (v, x) in mesh.vertices().iter().enumerate() {
        let _ = write!(s, "{:.6},{:.6},{:.6e},{:.6e},{:.6}", x[0], x[1], state.u[v], state.u[n_nodes + v], state.xi[v]);
        for i in 0..networks {
            let _ = write!(s, ",{:.6}", state.p[i * nv + v]);
        }
        s.push('\n');
    }
    Ok(s)
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

/// Runs the coupled scheme with `preset.dt` and the decoupled scheme with
/// `preset.dt_decoupled` and `preset.iterations` on an
/// `n_radial x n_angular` annulus, timing each run end to end. `retention`
/// applies to both runs.
pub fn annulus_comparison(preset: &PhysiologicalPreset, n_radial: usize, n_angular: usize, retention: Retention) -> Result<AnnulusComparison> {
    let mesh = Arc::new(annulus_mesh(preset.r_inner, preset.r_outer, n_radial, n_angular)?);
    let spec = preset.problem(mesh.clone())?;
    let t = preset.final_time;
    let coupled_cfg = SchemeConfig::to_final_time(Scheme::Coupled, t, preset.dt)?.with_retention(retention);
    let decoupled_cfg = SchemeConfig::to_final_time(Scheme::Decoupled(StoppingRule::FixedIters(preset.iterations)), t, preset.dt_decoupled)?.with_retention(retention);

    let start = Instant::now();
    let coupled = run(&spec, &coupled_cfg, &preset.probes)?;
    let coupled_wall = start.elapsed();
    let start = Instant::now();
    let decoupled = run(&spec, &decoupled_cfg, &preset.probes)?;
    let decoupled_wall = start.elapsed();

    let n = preset.params.networks();
    let mut max_relative = vec![0.0; n + 1];
    let mut compared = 0;
    for s in decoupled.probes.iter().filter(|s| s.time >= COMPARE_AFTER - 1e-9) {
        let Some(r) = coupled.probes.iter().find(|r| (r.time - s.time).abs() < 1e-9) else {
            continue;
        };
        compared += 1;
        for (a, b) in s.values.iter().zip(&r.values) {
            max_relative[0] = f64::max(max_relative[0], relative(a.u[0].hypot(a.u[1]), b.u[0].hypot(b.u[1])));
            for i in 0..n {
                max_relative[i + 1] = f64::max(max_relative[i + 1], relative(a.p[i], b.p[i]));
            }
        }
    }
    if compared == 0 {
        return Err(Error::Argument("the two runs share no probe times after the comparison start".into()));
    }

    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); n];
    let mut finite = true;
    for s in coupled.probes.iter().chain(&decoupled.probes) {
        for v in &s.values {
            finite &= v.u.iter().all(|x| x.is_finite()) && v.xi.is_finite();
            for (i, p) in v.p.iter().enumerate() {
                finite &= p.is_finite();
                ranges[i] = (ranges[i].0.min(*p), ranges[i].1.max(*p));
            }
        }
    }
    for out in [&coupled, &decoupled] {
        let st = &out.final_state;
        finite &= st.u.iter().chain(&st.xi).chain(&st.p).all(|x| x.is_finite());
    }

    Ok(AnnulusComparison {
        mesh,
        coupled,
        decoupled,
        coupled_wall,
        decoupled_wall,
        max_relative,
        envelopes: boundary_envelopes(preset),
        ranges,
        finite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::physiological_preset;

    #[test]
    fn envelopes_follow_boundary_data() {
        let p = physiological_preset().unwrap();
        let e = boundary_envelopes(&p);
        let mm: Vec<(f64, f64)> = e.iter().map(|(a, b)| (a / MMHG_TO_PA, b / MMHG_TO_PA)).collect();
        assert!((mm[0].0 - 2.988).abs() < 1e-6 && (mm[0].1 - 7.012).abs() < 1e-6, "{mm:?}");
        assert!((mm[1].0 - 60.0).abs() < 1e-6 && (mm[1].1 - 80.0).abs() < 1e-6);
        assert_eq!(mm[2], (6.0, 6.0));
        assert!((mm[3].0 - 38.0).abs() < 1e-9 && (mm[3].1 - 38.0).abs() < 1e-9);
    }

    #[test]
    fn short_coarse_comparison() {
        let mut p = physiological_preset().unwrap();
        p.final_time = 1.25;
        p.dt = 0.125;
        p.dt_decoupled = 0.125;
        p.iterations = 60;
        let c = annulus_comparison(&p, 2, 16, Retention::Full).unwrap();
        assert!(c.finite);
        // same step, converged iteration: the schemes agree closely
        assert!(c.agreement_holds(1e-6), "{}", c.summary());
        // exchange with p1 and p4 pulls p3 above its fixed 6 mmHg boundary
        // value, far enough to leave the widened envelope
        assert_eq!(c.envelope_violations(0.5), vec![2], "{}", c.summary());
        assert!(c.ranges[2].1 > c.ranges[2].0);
        let csv = probe_csv(&c.coupled, p.probes.len(), 4);
        assert_eq!(csv.lines().count(), c.coupled.probes.len() + 1);
        assert!(csv.starts_with("time[s],probe0_u_magnitude[mm],probe0_p1[Pa],probe0_p1[mmHg],probe0_p2[Pa]"));
        assert_eq!(csv.lines().nth(1).unwrap().split(',').count(), 1 + 3 * 9);
        let last = c.decoupled.trajectory.last().unwrap();
        assert_eq!(last, &c.decoupled.final_state);
        let snap = vertex_csv(last, &c.mesh).unwrap();
        assert_eq!(snap.lines().count(), c.mesh.n_vertices() + 1);
        assert!(snap.starts_with("x[mm],y[mm],u_x[mm],u_y[mm],xi[Pa],p1[Pa],p2[Pa],p3[Pa],p4[Pa]\n"));
        assert!(vertex_csv(last, &annulus_mesh(30.0, 70.0, 2, 8).unwrap()).is_err());
    }

    #[test]
    fn widened_envelope_check() {
        let p = physiological_preset().unwrap();
        let empty = || RunOutput {
            final_state: crate::solvers::SystemState {
                time: 0.0,
                u: vec![],
                xi: vec![],
                p: vec![],
            },
            trajectory: vec![],
            probes: vec![],
            report: Default::default(),
        };
        let mut c = AnnulusComparison {
            mesh: Arc::new(annulus_mesh(30.0, 70.0, 1, 8).unwrap()),
            coupled: empty(),
            decoupled: empty(),
            coupled_wall: Duration::from_secs(2),
            decoupled_wall: Duration::from_secs(1),
            max_relative: vec![0.0; 5],
            envelopes: boundary_envelopes(&p),
            ranges: boundary_envelopes(&p),
            finite: true,
        };
        assert!(c.envelope_violations(0.5).is_empty());
        assert!(c.decoupled_faster());
        c.ranges[2].1 = 9.5 * MMHG_TO_PA;
        assert_eq!(c.envelope_violations(0.5), vec![2]);
    }
}
