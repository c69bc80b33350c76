//! Boundary programs and complete problem descriptions.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::params::MpetParameters;
use crate::error::{Error, Result};
use crate::fem::{assemble_functional, Constraints, FeSpace, Load, SpaceKind};
use crate::mesh::{BoundaryTag, Mesh};

pub type ScalarFn = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn([f64; 2], f64) -> [f64; 2] + Send + Sync>;
/// One value per network.
pub type FieldFn = Arc<dyn Fn([f64; 2], f64) -> Vec<f64> + Send + Sync>;
/// Receives the point, the time and the outward unit normal.
pub type TractionFn = Arc<dyn Fn([f64; 2], f64, [f64; 2]) -> [f64; 2] + Send + Sync>;
pub type FluxFn = Arc<dyn Fn([f64; 2], f64, [f64; 2]) -> f64 + Send + Sync>;

/// Condition on the displacement along one boundary part.
#[derive(Clone)]
pub enum DisplacementBc {
    Fixed(VectorFn),
    /// Total traction `(2 mu eps(u) - xi I) n`.
    Traction(TractionFn),
}

/// Condition on one network pressure along one boundary part.
#[derive(Clone)]
pub enum PressureBc {
    Fixed(ScalarFn),
    /// Normal flux `K grad p . n`.
    Flux(FluxFn),
}

impl DisplacementBc {
    pub fn zero() -> Self {
        DisplacementBc::Fixed(Arc::new(|_, _| [0.0; 2]))
    }

    pub fn traction_free() -> Self {
        DisplacementBc::Traction(Arc::new(|_, _, _| [0.0; 2]))
    }
}

impl PressureBc {
    pub fn zero() -> Self {
        PressureBc::Fixed(Arc::new(|_, _| 0.0))
    }

    pub fn constant(value: f64) -> Self {
        PressureBc::Fixed(Arc::new(move |_, _| value))
    }

    pub fn no_flux() -> Self {
        PressureBc::Flux(Arc::new(|_, _, _| 0.0))
    }
}

impl fmt::Debug for DisplacementBc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DisplacementBc::Fixed(_) => "Fixed",
            DisplacementBc::Traction(_) => "Traction",
        })
    }
}

impl fmt::Debug for PressureBc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PressureBc::Fixed(_) => "Fixed",
            PressureBc::Flux(_) => "Flux",
        })
    }
}

/// Per-field map from boundary tags to conditions.
#[derive(Debug, Clone)]
pub struct BoundaryProgram {
    displacement: BTreeMap<BoundaryTag, DisplacementBc>,
    pressure: Vec<BTreeMap<BoundaryTag, PressureBc>>,
}

impl BoundaryProgram {
    pub fn new(networks: usize) -> Self {
        Self {
            displacement: BTreeMap::new(),
            pressure: vec![BTreeMap::new(); networks],
        }
    }

    /// Homogeneous Dirichlet data for every field on every tag in `tags`.
    pub fn homogeneous_dirichlet(networks: usize, tags: &[BoundaryTag]) -> Self {
        let mut out = Self::new(networks);
        for &tag in tags {
            out.set_displacement(tag, DisplacementBc::zero());
            for i in 0..networks {
                out.pressure[i].insert(tag, PressureBc::zero());
            }
        }
        out
    }

    pub fn networks(&self) -> usize {
        self.pressure.len()
    }

    pub fn set_displacement(&mut self, tag: BoundaryTag, bc: DisplacementBc) -> &mut Self {
        self.displacement.insert(tag, bc);
        self
    }

    pub fn set_pressure(&mut self, network: usize, tag: BoundaryTag, bc: PressureBc) -> Result<&mut Self> {
        let n = self.networks();
        self.pressure
            .get_mut(network)
            .ok_or_else(|| Error::Argument(format!("network {network} out of range for {n} networks")))?
            .insert(tag, bc);
        Ok(self)
    }

    pub fn displacement(&self, tag: BoundaryTag) -> Option<&DisplacementBc> {
        self.displacement.get(&tag)
    }

    pub fn pressure(&self, network: usize, tag: BoundaryTag) -> Option<&PressureBc> {
        self.pressure.get(network)?.get(&tag)
    }

    /// Checks that every boundary part of `mesh` has a condition for every field.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        for tag in mesh.tags() {
            if !self.displacement.contains_key(&tag) {
                return Err(Error::Configuration(format!("no displacement condition on {tag}")));
            }
            for (i, map) in self.pressure.iter().enumerate() {
                if !map.contains_key(&tag) {
                    return Err(Error::Configuration(format!("no condition for p{} on {tag}", i + 1)));
                }
            }
        }
        Ok(())
    }

    fn tags_where<T>(map: &BTreeMap<BoundaryTag, T>, pred: impl Fn(&T) -> bool) -> Vec<BoundaryTag> {
        map.iter().filter(|(_, bc)| pred(bc)).map(|(t, _)| *t).collect()
    }

    pub fn has_displacement_dirichlet(&self) -> bool {
        self.displacement.values().any(|bc| matches!(bc, DisplacementBc::Fixed(_)))
    }
}

/// A complete quasi-static problem on `[0, T]`.
#[derive(Clone)]
pub struct ProblemSpec {
    pub mesh: Arc<Mesh>,
    pub params: MpetParameters,
    pub boundary: BoundaryProgram,
    pub body_force: Option<VectorFn>,
    pub source: Option<FieldFn>,
    /// Zero when absent.
    pub initial_displacement: Option<VectorFn>,
    /// Zero when absent.
    pub initial_pressure: Option<FieldFn>,
    /// When absent, `alpha^T p_0 - lambda div u_0`.
    pub initial_total_pressure: Option<ScalarFn>,
    pub final_time: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("vertices", &self.mesh.n_vertices())
            .field("triangles", &self.mesh.n_triangles())
            .field("params", &self.params)
            .field("boundary", &self.boundary)
            .field("final_time", &self.final_time)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(mesh: Arc<Mesh>, params: MpetParameters, boundary: BoundaryProgram, final_time: f64) -> Result<Self> {
        if boundary.networks() != params.networks() {
            return Err(Error::Dimension {
                expected: params.networks(),
                got: boundary.networks(),
            });
        }
        if !(final_time >= 0.0) || !final_time.is_finite() {
            return Err(Error::Argument(format!("final time must be non-negative, got {final_time}")));
        }
        boundary.validate(&mesh)?;
        Ok(Self {
            mesh,
            params,
            boundary,
            body_force: None,
            source: None,
            initial_displacement: None,
            initial_pressure: None,
            initial_total_pressure: None,
            final_time,
        })
    }

    pub fn with_body_force(mut self, f: VectorFn) -> Self {
        self.body_force = Some(f);
        self
    }

    pub fn with_source(mut self, g: FieldFn) -> Self {
        self.source = Some(g);
        self
    }

    pub fn with_initial_displacement(mut self, u0: VectorFn) -> Self {
        self.initial_displacement = Some(u0);
        self
    }

    pub fn with_initial_pressure(mut self, p0: FieldFn) -> Self {
        self.initial_pressure = Some(p0);
        self
    }

    pub fn with_initial_total_pressure(mut self, xi0: ScalarFn) -> Self {
        self.initial_total_pressure = Some(xi0);
        self
    }

    pub fn networks(&self) -> usize {
        self.params.networks()
    }

    fn check_space(space: &FeSpace, kind: SpaceKind) -> Result<()> {
        if space.kind() != kind {
            return Err(Error::Argument(format!("expected a {kind:?} space, got {:?}", space.kind())));
        }
        Ok(())
    }

    /// Prescribed displacement values at time `t`.
    pub fn displacement_constraints(&self, space: &FeSpace, t: f64) -> Result<Constraints> {
        Self::check_space(space, SpaceKind::VectorP2)?;
        let mut out = Constraints::new();
        for (&tag, bc) in &self.boundary.displacement {
            if let DisplacementBc::Fixed(g) = bc {
                for node in space.boundary_nodes(&[tag]) {
                    let v = g(space.node_coords(node), t);
                    out.insert(space.dof(0, node), v[0])?;
                    out.insert(space.dof(1, node), v[1])?;
                }
            }
        }
        Ok(out)
    }

    /// Prescribed pressure values at time `t`.
    pub fn pressure_constraints(&self, space: &FeSpace, t: f64) -> Result<Constraints> {
        Self::check_space(space, SpaceKind::MultiScalarP1 { networks: self.networks() })?;
        let mut out = Constraints::new();
        for (i, map) in self.boundary.pressure.iter().enumerate() {
            for (&tag, bc) in map {
                if let PressureBc::Fixed(g) = bc {
                    for node in space.boundary_nodes(&[tag]) {
                        out.insert(space.dof(i, node), g(space.node_coords(node), t))?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `(f, v) + <h, v>` at time `t`.
    pub fn displacement_load(&self, space: &FeSpace, t: f64) -> Result<Vec<f64>> {
        Self::check_space(space, SpaceKind::VectorP2)?;
        let mut out = match &self.body_force {
            Some(f) => assemble_functional(&Load::BodyForce(f.as_ref()), space, t)?,
            None => vec![0.0; space.n_dofs()],
        };
        for (&tag, bc) in &self.boundary.displacement {
            if let DisplacementBc::Traction(h) = bc {
                let part = assemble_functional(&Load::BoundaryTraction { tags: &[tag], data: h.as_ref() }, space, t)?;
                out.iter_mut().zip(part).for_each(|(o, p)| *o += p);
            }
        }
        Ok(out)
    }

    /// `(g, q) + <l, q>` at time `t`.
    pub fn pressure_load(&self, space: &FeSpace, t: f64) -> Result<Vec<f64>> {
        Self::check_space(space, SpaceKind::MultiScalarP1 { networks: self.networks() })?;
        let mut out = match &self.source {
            Some(g) => assemble_functional(&Load::Source(g.as_ref()), space, t)?,
            None => vec![0.0; space.n_dofs()],
        };
        for (i, map) in self.boundary.pressure.iter().enumerate() {
            for (&tag, bc) in map {
                if let PressureBc::Flux(l) = bc {
                    let load = Load::BoundaryFlux {
                        network: i,
                        tags: &[tag],
                        data: l.as_ref(),
                    };
                    let part = assemble_functional(&load, space, t)?;
                    out.iter_mut().zip(part).for_each(|(o, p)| *o += p);
                }
            }
        }
        Ok(out)
    }

    /// Tags on which some network pressure is prescribed.
    pub fn pressure_dirichlet_tags(&self, network: usize) -> Vec<BoundaryTag> {
        self.boundary
            .pressure
            .get(network)
            .map(|m| BoundaryProgram::tags_where(m, |bc| matches!(bc, PressureBc::Fixed(_))))
            .unwrap_or_default()
    }

    /// Tags on which the displacement is prescribed.
    pub fn displacement_dirichlet_tags(&self) -> Vec<BoundaryTag> {
        BoundaryProgram::tags_where(&self.boundary.displacement, |bc| matches!(bc, DisplacementBc::Fixed(_)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;

    fn square() -> Arc<Mesh> {
        Arc::new(unit_square_mesh(4).unwrap())
    }

    fn params() -> MpetParameters {
        MpetParameters::accuracy(0.3, 1.0, 1.0).unwrap()
    }

    #[test]
    fn missing_condition_is_reported() {
        let mut b = BoundaryProgram::homogeneous_dirichlet(2, &[BoundaryTag::Gamma1, BoundaryTag::Gamma2, BoundaryTag::Gamma3]);
        let err = ProblemSpec::new(square(), params(), b.clone(), 1.0).unwrap_err();
        assert!(err.to_string().contains("Gamma4"), "{err}");
        b.set_displacement(BoundaryTag::Gamma4, DisplacementBc::traction_free());
        let err = ProblemSpec::new(square(), params(), b.clone(), 1.0).unwrap_err();
        assert!(err.to_string().contains("p1"), "{err}");
        b.set_pressure(0, BoundaryTag::Gamma4, PressureBc::no_flux()).unwrap();
        b.set_pressure(1, BoundaryTag::Gamma4, PressureBc::no_flux()).unwrap();
        assert!(ProblemSpec::new(square(), params(), b, 1.0).is_ok());
    }

    #[test]
    fn network_count_must_match() {
        let b = BoundaryProgram::homogeneous_dirichlet(3, &BoundaryTag::ALL);
        assert!(matches!(ProblemSpec::new(square(), params(), b, 1.0), Err(Error::Dimension { .. })));
    }

    #[test]
    fn constraints_cover_boundary() {
        let mesh = square();
        let b = BoundaryProgram::homogeneous_dirichlet(2, &BoundaryTag::ALL);
        let spec = ProblemSpec::new(mesh.clone(), params(), b, 1.0).unwrap();
        let vs = FeSpace::new(SpaceKind::VectorP2, mesh.clone()).unwrap();
        let ps = FeSpace::new(SpaceKind::MultiScalarP1 { networks: 2 }, mesh).unwrap();
        // P2 on 4x4: 32 boundary nodes, two components
        assert_eq!(spec.displacement_constraints(&vs, 0.0).unwrap().len(), 64);
        assert_eq!(spec.pressure_constraints(&ps, 0.0).unwrap().len(), 32);
        assert!(spec.displacement_constraints(&ps, 0.0).is_err());
    }

    #[test]
    fn flux_load_integrates_edge_data() {
        let mesh = square();
        let mut b = BoundaryProgram::homogeneous_dirichlet(2, &[BoundaryTag::Gamma2, BoundaryTag::Gamma3, BoundaryTag::Gamma4]);
        b.set_displacement(BoundaryTag::Gamma1, DisplacementBc::Traction(Arc::new(|_, _, n| [2.0 * n[0], 0.0])));
        b.set_pressure(0, BoundaryTag::Gamma1, PressureBc::Flux(Arc::new(|_, t, _| t))).unwrap();
        b.set_pressure(1, BoundaryTag::Gamma1, PressureBc::no_flux()).unwrap();
        let spec = ProblemSpec::new(mesh.clone(), params(), b, 1.0).unwrap();
        let ps = FeSpace::new(SpaceKind::MultiScalarP1 { networks: 2 }, mesh.clone()).unwrap();
        let l = spec.pressure_load(&ps, 3.0).unwrap();
        let n = ps.n_nodes();
        assert!((l[..n].iter().sum::<f64>() - 3.0).abs() < 1e-13);
        assert!(l[n..].iter().all(|v| *v == 0.0));
        let vs = FeSpace::new(SpaceKind::VectorP2, mesh).unwrap();
        let f = spec.displacement_load(&vs, 0.0).unwrap();
        let nn = vs.n_nodes();
        assert!((f[..nn].iter().sum::<f64>() - 2.0).abs() < 1e-13);
        assert_eq!(spec.displacement_dirichlet_tags().len(), 3);
        assert_eq!(spec.pressure_dirichlet_tags(1), vec![BoundaryTag::Gamma2, BoundaryTag::Gamma3, BoundaryTag::Gamma4]);
    }

    #[test]
    fn corner_conflict_is_an_error() {
        let mesh = square();
        let mut b = BoundaryProgram::homogeneous_dirichlet(2, &BoundaryTag::ALL);
        b.set_pressure(0, BoundaryTag::Gamma1, PressureBc::constant(1.0)).unwrap();
        let spec = ProblemSpec::new(mesh.clone(), params(), b, 1.0).unwrap();
        let ps = FeSpace::new(SpaceKind::MultiScalarP1 { networks: 2 }, mesh).unwrap();
        assert!(matches!(spec.pressure_constraints(&ps, 0.0), Err(Error::Constraint { .. })));
    }
}
