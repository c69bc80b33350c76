use std::collections::BTreeMap;
use std::sync::Arc;

use super::basis::{basis_gradients, basis_values, ElementGeometry, ElementKind};
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh};

/// The three discrete spaces of the formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// Continuous P2 vectors (displacement).
    VectorP2,
    /// Continuous P1 scalars (total pressure).
    ScalarP1,
    /// `N` continuous P1 scalars (network pressures).
    MultiScalarP1 { networks: usize },
}

/// Element-to-global dof table.
///
/// Vector P2 dofs are blocked by component (`component * n_nodes + node`) and
/// multi-network P1 dofs by network (`network * n_vertices + vertex`). Local
/// element dofs follow the same blocking: all nodes of component 0 first.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    per_element: usize,
    table: Vec<usize>,
}

impl DofMap {
    pub fn element(&self, k: usize) -> &[usize] {
        &self.table[k * self.per_element..(k + 1) * self.per_element]
    }

    pub fn per_element(&self) -> usize {
        self.per_element
    }
}

/// A finite-element space on a shared mesh.
#[derive(Debug, Clone)]
pub struct FeSpace {
    kind: SpaceKind,
    mesh: Arc<Mesh>,
    n_nodes: usize,
    dofmap: DofMap,
}

impl FeSpace {
    pub fn new(kind: SpaceKind, mesh: Arc<Mesh>) -> Result<Self> {
        if let SpaceKind::MultiScalarP1 { networks: 0 } = kind {
            return Err(Error::Argument("a multi-network space needs at least one network".into()));
        }
        let nv = mesh.n_vertices();
        let element = if kind == SpaceKind::VectorP2 { ElementKind::P2 } else { ElementKind::P1 };
        let n_nodes = match element {
            ElementKind::P1 => nv,
            ElementKind::P2 => nv + mesh.n_edges(),
        };
        let comps = components_of(kind);
        let nl = element.n_local();
        let mut table = Vec::with_capacity(mesh.n_triangles() * nl * comps);
        for (t, e) in mesh.triangles().iter().zip(mesh.triangle_edges()) {
            let mut nodes = [t[0], t[1], t[2], 0, 0, 0];
            for i in 0..3 {
                nodes[3 + i] = nv + e[i];
            }
            for c in 0..comps {
                for &node in &nodes[..nl] {
                    table.push(c * n_nodes + node);
                }
            }
        }
        Ok(Self {
            kind,
            mesh,
            n_nodes,
            dofmap: DofMap { per_element: nl * comps, table },
        })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn element_kind(&self) -> ElementKind {
        if self.kind == SpaceKind::VectorP2 {
            ElementKind::P2
        } else {
            ElementKind::P1
        }
    }

    pub fn n_components(&self) -> usize {
        components_of(self.kind)
    }

    /// Scalar nodes per component.
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_dofs(&self) -> usize {
        self.n_nodes * self.n_components()
    }

    pub fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    pub fn same_mesh(&self, other: &FeSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh
    }

    /// Coordinates of a scalar node (vertex or edge midpoint).
    pub fn node_coords(&self, node: usize) -> [f64; 2] {
        let nv = self.mesh.n_vertices();
        if node < nv {
            self.mesh.vertices()[node]
        } else {
            let [a, b] = self.mesh.edges()[node - nv];
            let (pa, pb) = (self.mesh.vertices()[a], self.mesh.vertices()[b]);
            [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
        }
    }

    /// Scalar nodes lying on boundary edges with any of `tags`, sorted.
    pub fn boundary_nodes(&self, tags: &[BoundaryTag]) -> Vec<usize> {
        let nv = self.mesh.n_vertices();
        let mut nodes = Vec::new();
        for &([a, b], tag) in self.mesh.boundary_edges() {
            if !tags.contains(&tag) {
                continue;
            }
            nodes.push(a);
            nodes.push(b);
            if self.element_kind() == ElementKind::P2 {
                nodes.push(nv + self.mesh.edge_id(a, b).expect("boundary edge is a mesh edge"));
            }
        }
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// Global dof of a node in one component.
    pub fn dof(&self, component: usize, node: usize) -> usize {
        component * self.n_nodes + node
    }

    /// Nodal interpolant of `f`, which returns one value per component.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> Vec<f64>) -> Vec<f64> {
        let comps = self.n_components();
        let mut out = vec![0.0; self.n_dofs()];
        for node in 0..self.n_nodes {
            let v = f(self.node_coords(node));
            for c in 0..comps {
                out[c * self.n_nodes + node] = v[c];
            }
        }
        out
    }

    /// Field values (per component) and gradients at barycentric point `l`
    /// of element `k`.
    pub fn eval_in_element(&self, coeffs: &[f64], k: usize, geom: &ElementGeometry, l: [f64; 3]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let kind = self.element_kind();
        let nl = kind.n_local();
        let mut phi = [0.0; 6];
        let mut dphi = [[0.0; 2]; 6];
        basis_values(kind, l, &mut phi);
        basis_gradients(kind, l, &geom.grad_lambda, &mut dphi);
        let dofs = self.dofmap.element(k);
        let comps = self.n_components();
        let mut val = vec![0.0; comps];
        let mut grad = vec![[0.0; 2]; comps];
        for c in 0..comps {
            for a in 0..nl {
                let u = coeffs[dofs[c * nl + a]];
                val[c] += u * phi[a];
                grad[c][0] += u * dphi[a][0];
                grad[c][1] += u * dphi[a][1];
            }
        }
        (val, grad)
    }

    /// Evaluates the field with coefficients `coeffs` at point `p`.
    pub fn evaluate(&self, coeffs: &[f64], p: [f64; 2]) -> Result<Vec<f64>> {
        if coeffs.len() != self.n_dofs() {
            return Err(Error::Dimension { expected: self.n_dofs(), got: coeffs.len() });
        }
        let (k, l) = self
            .mesh
            .locate(p)
            .ok_or_else(|| Error::Argument(format!("point ({}, {}) is outside the mesh", p[0], p[1])))?;
        let geom = ElementGeometry::new(self.mesh.triangle_coords(k));
        Ok(self.eval_in_element(coeffs, k, &geom, l).0)
    }
}

fn components_of(kind: SpaceKind) -> usize {
    match kind {
        SpaceKind::VectorP2 => 2,
        SpaceKind::ScalarP1 => 1,
        SpaceKind::MultiScalarP1 { networks } => networks,
    }
}

/// Prescribed values on a set of dofs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Constraints {
    values: BTreeMap<usize, f64>,
}

impl Constraints {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `dof = value`. Repeating a dof with the same value is allowed;
    /// a different value is a constraint error.
    pub fn insert(&mut self, dof: usize, value: f64) -> Result<()> {
        if let Some(&old) = self.values.get(&dof) {
            if (old - value).abs() > 1e-12 * old.abs().max(value.abs()).max(1.0) {
                return Err(Error::Constraint { dof, first: old, second: value });
            }
            return Ok(());
        }
        self.values.insert(dof, value);
        Ok(())
    }

    /// Shifts every dof index by `offset`, used to place field constraints
    /// into a monolithic system.
    pub fn shifted(&self, offset: usize) -> Constraints {
        Constraints { values: self.values.iter().map(|(&d, &v)| (d + offset, v)).collect() }
    }

    pub fn merge(&mut self, other: &Constraints) -> Result<()> {
        for (&d, &v) in &other.values {
            self.insert(d, v)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, dof: usize) -> Option<f64> {
        self.values.get(&dof).copied()
    }

    pub fn dofs(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().map(|(&d, &v)| (d, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;

    fn square(n: usize) -> Arc<Mesh> {
        Arc::new(unit_square_mesh(n).unwrap())
    }

    #[test]
    fn dof_counts() {
        let m = square(3);
        let nv = m.n_vertices();
        let ne = m.n_edges();
        assert_eq!(FeSpace::new(SpaceKind::VectorP2, m.clone()).unwrap().n_dofs(), 2 * (nv + ne));
        assert_eq!(FeSpace::new(SpaceKind::ScalarP1, m.clone()).unwrap().n_dofs(), nv);
        assert_eq!(FeSpace::new(SpaceKind::MultiScalarP1 { networks: 3 }, m).unwrap().n_dofs(), 3 * nv);
    }

    #[test]
    fn element_dofs_are_injective() {
        let s = FeSpace::new(SpaceKind::VectorP2, square(2)).unwrap();
        for k in 0..s.mesh().n_triangles() {
            let mut d = s.dofmap().element(k).to_vec();
            d.sort_unstable();
            d.dedup();
            assert_eq!(d.len(), 12);
        }
    }

    #[test]
    fn p2_interpolation_is_exact_for_quadratics() {
        let s = FeSpace::new(SpaceKind::VectorP2, square(3)).unwrap();
        let f = |p: [f64; 2]| vec![p[0] * p[0] - 2.0 * p[0] * p[1], 1.0 + p[1] * p[1]];
        let c = s.interpolate(f);
        for p in [[0.123, 0.777], [0.5, 0.5], [0.91, 0.05]] {
            let v = s.evaluate(&c, p).unwrap();
            let e = f(p);
            assert!((v[0] - e[0]).abs() < 1e-13 && (v[1] - e[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn vertex_evaluation_returns_nodal_value() {
        let s = FeSpace::new(SpaceKind::ScalarP1, square(4)).unwrap();
        let c: Vec<f64> = (0..s.n_dofs()).map(|i| i as f64 * 0.37).collect();
        let node = 7;
        let v = s.evaluate(&c, s.node_coords(node)).unwrap();
        assert_eq!(v[0], c[node]);
    }

    #[test]
    fn outside_point_is_argument_error() {
        let s = FeSpace::new(SpaceKind::ScalarP1, square(2)).unwrap();
        let c = vec![0.0; s.n_dofs()];
        assert!(matches!(s.evaluate(&c, [2.0, 0.0]), Err(Error::Argument(_))));
    }

    #[test]
    fn boundary_nodes_on_one_side() {
        let s = FeSpace::new(SpaceKind::VectorP2, square(4)).unwrap();
        assert_eq!(s.boundary_nodes(&[BoundaryTag::Gamma2]).len(), 9);
        let p = FeSpace::new(SpaceKind::ScalarP1, square(4)).unwrap();
        assert_eq!(p.boundary_nodes(&BoundaryTag::ALL).len(), 16);
    }

    #[test]
    fn conflicting_constraints() {
        let mut c = Constraints::new();
        c.insert(3, 1.0).unwrap();
        c.insert(3, 1.0).unwrap();
        assert!(matches!(c.insert(3, 2.0), Err(Error::Constraint { dof: 3, .. })));
    }
}
