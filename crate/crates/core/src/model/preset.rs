//! Four-network brain model with heartbeat-driven boundary data, posed on
//! an annulus whose outer circle plays the skull and inner circle the
//! ventricles. Lengths in mm, pressures in Pa.

use std::f64::consts::PI;
use std::sync::Arc;

use super::params::MpetParameters;
use super::problem::{BoundaryProgram, DisplacementBc, PressureBc, ProblemSpec, ScalarFn};
use crate::error::Result;
use crate::mesh::{BoundaryTag, Mesh};

pub const MMHG_TO_PA: f64 = 133.32;

/// Ventricle pressures `p_{j,V}` in mmHg entering the traction.
fn ventricle_pressures_mmhg(t: f64) -> [f64; 4] {
    let beat = (2.0 * PI * t).sin();
    [5.0 + 2.012 * beat, 70.0 + 10.0 * beat, 6.0, 38.0]
}

/// Parameters, boundary data and run settings of the physiological model.
#[derive(Debug, Clone)]
pub struct PhysiologicalPreset {
    pub params: MpetParameters,
    pub boundary: BoundaryProgram,
    /// Initial network pressures in Pa.
    pub initial_pressure: [f64; 4],
    pub r_inner: f64,
    pub r_outer: f64,
    pub final_time: f64,
    pub dt: f64,
    /// Larger step used by the decoupled scheme in the timing comparison.
    pub dt_decoupled: f64,
    pub iterations: usize,
    pub probes: Vec<[f64; 2]>,
}

impl PhysiologicalPreset {
    /// Traction scalar `s(t) = -sum_j alpha_j p_{j,V}(t)` in Pa.
    pub fn ventricle_load(&self, t: f64) -> f64 {
        ventricle_load(&self.params.alpha, t)
    }

    pub fn problem(&self, mesh: Arc<Mesh>) -> Result<ProblemSpec> {
        let p0 = self.initial_pressure.to_vec();
        Ok(ProblemSpec::new(mesh, self.params.clone(), self.boundary.clone(), self.final_time)?
            .with_initial_pressure(Arc::new(move |_, _| p0.clone())))
    }
}

fn ventricle_load(alpha: &[f64], t: f64) -> f64 {
    -alpha.iter().zip(ventricle_pressures_mmhg(t)).map(|(a, p)| a * p).sum::<f64>() * MMHG_TO_PA
}

fn heartbeat(mean: f64, amplitude: f64) -> PressureBc {
    let f: ScalarFn = Arc::new(move |_, t| (mean + amplitude * (2.0 * PI * t).sin()) * MMHG_TO_PA);
    PressureBc::Fixed(f)
}

pub fn physiological_preset() -> Result<PhysiologicalPreset> {
    let b = 1e-6;
    let params = MpetParameters::new(
        1500.0,
        0.4999,
        vec![0.49, 0.25, 0.01, 0.25],
        vec![3.9e-4, 2.9e-4, 1.5e-5, 2.9e-4],
        vec![1.57e-5, 3.75e-6, 3.75e-6, 3.75e-6],
        vec![
            vec![0.0, 0.0, b, b],
            vec![0.0, 0.0, 0.0, b],
            vec![b, 0.0, 0.0, b],
            vec![b, b, b, 0.0],
        ],
    )?;
    let (s, v) = (BoundaryTag::GammaS, BoundaryTag::GammaV);
    let mut boundary = BoundaryProgram::new(4);
    boundary.set_displacement(s, DisplacementBc::zero());
    let alpha = params.alpha.clone();
    boundary.set_displacement(
        v,
        DisplacementBc::Traction(Arc::new(move |_, t, n| {
            let s = ventricle_load(&alpha, t);
            [s * n[0], s * n[1]]
        })),
    );
    boundary.set_pressure(0, s, heartbeat(5.0, 2.0))?;
    boundary.set_pressure(0, v, heartbeat(5.0, 2.012))?;
    boundary.set_pressure(1, s, heartbeat(70.0, 10.0))?;
    boundary.set_pressure(1, v, PressureBc::no_flux())?;
    boundary.set_pressure(2, s, PressureBc::constant(6.0 * MMHG_TO_PA))?;
    boundary.set_pressure(2, v, PressureBc::constant(6.0 * MMHG_TO_PA))?;
    boundary.set_pressure(3, s, PressureBc::no_flux())?;
    boundary.set_pressure(3, v, PressureBc::no_flux())?;
    let r = 5.0 * PI / 4.0;
    Ok(PhysiologicalPreset {
        params,
        boundary,
        initial_pressure: [5.0, 70.0, 6.0, 38.0].map(|p| p * MMHG_TO_PA),
        r_inner: 30.0,
        r_outer: 70.0,
        final_time: 3.0,
        dt: 0.0125,
        dt_decoupled: 0.0625,
        iterations: 5,
        // the centroid of the annulus lies in the hole; probes sit in the wall
        probes: vec![[50.0, 0.0], [0.0, 40.0], [60.0 * r.cos(), 60.0 * r.sin()]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::annulus_mesh;

    #[test]
    fn conversion() {
        assert!((70.0 * MMHG_TO_PA - 9332.4).abs() < 1e-9);
    }

    #[test]
    fn traction_at_start() {
        let p = physiological_preset().unwrap();
        assert!((p.ventricle_load(0.0) / MMHG_TO_PA + 29.51).abs() < 1e-12);
    }

    #[test]
    fn table_values() {
        let p = physiological_preset().unwrap();
        let q = &p.params;
        assert_eq!(q.networks(), 4);
        assert_eq!(q.young, 1500.0);
        assert_eq!(q.exchange[0][1], 0.0);
        assert_eq!(q.exchange[1][2], 0.0);
        for i in 0..4 {
            assert_eq!(q.exchange[i][i], 0.0);
            for j in 0..4 {
                assert_eq!(q.exchange[i][j], q.exchange[j][i]);
            }
        }
        assert_eq!(p.initial_pressure[1], 70.0 * MMHG_TO_PA);
    }

    #[test]
    fn boundary_program_kinds() {
        let p = physiological_preset().unwrap();
        let (s, v) = (BoundaryTag::GammaS, BoundaryTag::GammaV);
        assert!(matches!(p.boundary.displacement(s), Some(DisplacementBc::Fixed(_))));
        assert!(matches!(p.boundary.displacement(v), Some(DisplacementBc::Traction(_))));
        assert!(matches!(p.boundary.pressure(3, s), Some(PressureBc::Flux(_))));
        assert!(matches!(p.boundary.pressure(1, v), Some(PressureBc::Flux(_))));
        let Some(PressureBc::Fixed(g)) = p.boundary.pressure(1, s) else { panic!() };
        assert!((g([70.0, 0.0], 0.25) - 80.0 * MMHG_TO_PA).abs() < 1e-9);
        let mesh = Arc::new(annulus_mesh(p.r_inner, p.r_outer, 2, 16).unwrap());
        for probe in &p.probes {
            assert!(mesh.locate(*probe).is_some());
        }
        let spec = p.problem(mesh).unwrap();
        assert_eq!(spec.pressure_dirichlet_tags(3), vec![]);
    }
}
