//! Assembly of the bilinear forms and load functionals.

use super::basis::{basis_gradients, basis_values, ElementGeometry, ElementKind};
use super::quadrature::{edge_rule, quadrature_rule, QuadratureRule};
use super::space::{FeSpace, SpaceKind};
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::mesh::BoundaryTag;

/// Quadrature degree for matrices (exact for P2 x P2 with constant data).
pub const MATRIX_QUADRATURE: usize = 4;
/// Quadrature degree for load functionals.
pub const LOAD_QUADRATURE: usize = 6;

/// The bilinear forms of the discrete problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    /// `2 mu (eps(u), eps(v))`, vector P2 x vector P2.
    Elasticity,
    /// `(div u, eta)`, trial vector P2, test scalar P1.
    Divergence,
    /// `(1/lambda) (xi, eta)`, scalar P1 x scalar P1.
    ScalarMass,
    /// `((S + alpha alpha^T / lambda) p, q)` on the network space.
    NetworkMass,
    /// `(K grad p, grad q)`, block diagonal in networks.
    NetworkStiffness,
    /// `sum_{i<j} beta_ij (p_i - p_j, q_i - q_j)`.
    Exchange,
    /// `(1/lambda) (alpha^T p, eta)`, trial network P1, test scalar P1.
    CouplingAlphaMass,
}

impl FormKind {
    pub fn is_symmetric(self) -> bool {
        !matches!(self, FormKind::Divergence | FormKind::CouplingAlphaMass)
    }
}

/// Constant material coefficients used by the forms.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSpec {
    pub mu: f64,
    pub lambda: f64,
    pub alpha: Vec<f64>,
    pub storage: Vec<f64>,
    pub conductivity: Vec<f64>,
    /// Symmetric transfer coefficients, zero diagonal.
    pub exchange: Vec<Vec<f64>>,
}

impl CoefficientSpec {
    pub fn networks(&self) -> usize {
        self.alpha.len()
    }

    fn inv_lambda(&self) -> Result<f64> {
        if self.lambda > 0.0 && self.lambda.is_finite() {
            Ok(1.0 / self.lambda)
        } else {
            Err(Error::Parameter(format!("lambda must be positive, got {}", self.lambda)))
        }
    }

    fn check_networks(&self, n: usize) -> Result<()> {
        let ok = self.alpha.len() == n
            && self.storage.len() == n
            && self.conductivity.len() == n
            && self.exchange.len() == n
            && self.exchange.iter().all(|r| r.len() == n);
        if !ok {
            return Err(Error::Parameter(format!("coefficients do not describe {n} networks")));
        }
        if let Some(c) = self.storage.iter().find(|&&c| c < 0.0) {
            return Err(Error::Parameter(format!("storage coefficient {c} is negative")));
        }
        if let Some(k) = self.conductivity.iter().find(|&&k| k < 0.0) {
            return Err(Error::Parameter(format!("conductivity {k} is negative")));
        }
        for i in 0..n {
            for j in 0..n {
                let b = self.exchange[i][j];
                if b < 0.0 || (i == j && b != 0.0) || b != self.exchange[j][i] {
                    return Err(Error::Parameter("transfer matrix must be symmetric, non-negative, zero diagonal".into()));
                }
            }
        }
        Ok(())
    }
}

/// Basis tables on the quadrature points of a rule.
struct Tabulated {
    rule: QuadratureRule,
    values: Vec<[f64; 6]>,
}

impl Tabulated {
    fn new(kind: ElementKind, degree: usize) -> Result<Self> {
        let rule = quadrature_rule(degree)?;
        let values = rule
            .points
            .iter()
            .map(|&l| {
                let mut v = [0.0; 6];
                basis_values(kind, l, &mut v);
                v
            })
            .collect();
        Ok(Self { rule, values })
    }
}

fn networks_of(space: &FeSpace) -> Option<usize> {
    match space.kind() {
        SpaceKind::MultiScalarP1 { networks } => Some(networks),
        _ => None,
    }
}

fn require(cond: bool, form: FormKind, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Argument(format!("{form:?} form needs {what}")))
    }
}

/// Local P1 mass and stiffness matrices.
fn p1_local(geom: &ElementGeometry) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let a = geom.area;
    let mut m = [[a / 12.0; 3]; 3];
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        m[i][i] = a / 6.0;
        for j in 0..3 {
            let (gi, gj) = (geom.grad_lambda[i], geom.grad_lambda[j]);
            s[i][j] = a * (gi[0] * gj[0] + gi[1] * gj[1]);
        }
    }
    (m, s)
}

/// Assembles `form` with rows indexed by `test` dofs and columns by `trial`
/// dofs.
pub fn assemble_bilinear(form: FormKind, trial: &FeSpace, test: &FeSpace, coeff: &CoefficientSpec) -> Result<SparseMatrix> {
    if !trial.same_mesh(test) {
        return Err(Error::Argument("trial and test spaces live on different meshes".into()));
    }
    let mesh = trial.mesh().clone();
    let (nr, nc) = (test.n_dofs(), trial.n_dofs());
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut push_local = |k: usize, local: &[f64], rows: usize, cols: usize| {
        let rd = test.dofmap().element(k);
        let cd = trial.dofmap().element(k);
        for r in 0..rows {
            for c in 0..cols {
                triplets.push((rd[r], cd[c], local[r * cols + c]));
            }
        }
    };

    match form {
        FormKind::Elasticity => {
            require(trial.kind() == SpaceKind::VectorP2 && test.kind() == SpaceKind::VectorP2, form, "vector P2 spaces")?;
            if !(coeff.mu > 0.0) {
                return Err(Error::Parameter(format!("mu must be positive, got {}", coeff.mu)));
            }
            let tab = Tabulated::new(ElementKind::P2, MATRIX_QUADRATURE)?;
            let mut local = [0.0; 144];
            let mut dphi = [[0.0; 2]; 6];
            for k in 0..mesh.n_triangles() {
                let geom = ElementGeometry::new(mesh.triangle_coords(k));
                local.fill(0.0);
                for (q, &l) in tab.rule.points.iter().enumerate() {
                    let w = tab.rule.weights[q] * 2.0 * geom.area * coeff.mu;
                    basis_gradients(ElementKind::P2, l, &geom.grad_lambda, &mut dphi);
                    for d in 0..2 {
                        for b in 0..6 {
                            let row = d * 6 + b;
                            for c in 0..2 {
                                for a in 0..6 {
                                    let mut v = dphi[a][d] * dphi[b][c];
                                    if c == d {
                                        v += dphi[a][0] * dphi[b][0] + dphi[a][1] * dphi[b][1];
                                    }
                                    local[row * 12 + c * 6 + a] += w * v;
                                }
                            }
                        }
                    }
                }
                push_local(k, &local, 12, 12);
            }
        }
        FormKind::Divergence => {
            require(trial.kind() == SpaceKind::VectorP2 && test.kind() == SpaceKind::ScalarP1, form, "vector P2 trial and scalar P1 test")?;
            let tab = Tabulated::new(ElementKind::P1, MATRIX_QUADRATURE)?;
            let mut local = [0.0; 36];
            let mut dphi = [[0.0; 2]; 6];
            for k in 0..mesh.n_triangles() {
                let geom = ElementGeometry::new(mesh.triangle_coords(k));
                local.fill(0.0);
                for (q, &l) in tab.rule.points.iter().enumerate() {
                    let w = tab.rule.weights[q] * 2.0 * geom.area;
                    basis_gradients(ElementKind::P2, l, &geom.grad_lambda, &mut dphi);
                    for b in 0..3 {
                        let chi = tab.values[q][b];
                        for c in 0..2 {
                            for a in 0..6 {
                                local[b * 12 + c * 6 + a] += w * chi * dphi[a][c];
                            }
                        }
                    }
                }
                push_local(k, &local, 3, 12);
            }
        }
        FormKind::ScalarMass => {
            require(trial.kind() == SpaceKind::ScalarP1 && test.kind() == SpaceKind::ScalarP1, form, "scalar P1 spaces")?;
            let s = coeff.inv_lambda()?;
            for k in 0..mesh.n_triangles() {
                let (m, _) = p1_local(&ElementGeometry::new(mesh.triangle_coords(k)));
                let local: Vec<f64> = m.iter().flatten().map(|v| s * v).collect();
                push_local(k, &local, 3, 3);
            }
        }
        FormKind::NetworkMass | FormKind::NetworkStiffness | FormKind::Exchange => {
            let n = networks_of(trial).filter(|_| trial.kind() == test.kind());
            require(n.is_some(), form, "network spaces")?;
            let n = n.unwrap();
            coeff.check_networks(n)?;
            // network coupling matrix multiplying the scalar P1 block
            let mut coupling = vec![vec![0.0; n]; n];
            match form {
                FormKind::NetworkMass => {
                    let s = coeff.inv_lambda()?;
                    for i in 0..n {
                        for j in 0..n {
                            coupling[i][j] = coeff.alpha[i] * coeff.alpha[j] * s;
                        }
                        coupling[i][i] += coeff.storage[i];
                    }
                }
                FormKind::NetworkStiffness => {
                    for i in 0..n {
                        coupling[i][i] = coeff.conductivity[i];
                    }
                }
                _ => {
                    for i in 0..n {
                        for j in 0..n {
                            if i != j {
                                let b = coeff.exchange[i][j];
                                coupling[i][j] = -b;
                                coupling[i][i] += b;
                            }
                        }
                    }
                }
            }
            let m = 3 * n;
            let mut local = vec![0.0; m * m];
            for k in 0..mesh.n_triangles() {
                let (mass, stiff) = p1_local(&ElementGeometry::new(mesh.triangle_coords(k)));
                let base = if form == FormKind::NetworkStiffness { stiff } else { mass };
                for i in 0..n {
                    for j in 0..n {
                        for a in 0..3 {
                            for b in 0..3 {
                                local[(i * 3 + a) * m + j * 3 + b] = coupling[i][j] * base[a][b];
                            }
                        }
                    }
                }
                push_local(k, &local, m, m);
            }
        }
        FormKind::CouplingAlphaMass => {
            let n = networks_of(trial).filter(|_| test.kind() == SpaceKind::ScalarP1);
            require(n.is_some(), form, "network trial and scalar P1 test")?;
            let n = n.unwrap();
            coeff.check_networks(n)?;
            let s = coeff.inv_lambda()?;
            let mut local = vec![0.0; 3 * 3 * n];
            for k in 0..mesh.n_triangles() {
                let (mass, _) = p1_local(&ElementGeometry::new(mesh.triangle_coords(k)));
                for a in 0..3 {
                    for j in 0..n {
                        for b in 0..3 {
                            local[a * 3 * n + j * 3 + b] = coeff.alpha[j] * s * mass[a][b];
                        }
                    }
                }
                push_local(k, &local, 3, 3 * n);
            }
        }
    }

    let mut out = SparseMatrix::from_triplets(nr, nc, &triplets)?;
    if form.is_symmetric() {
        out.mark_symmetric()?;
    }
    Ok(out)
}

/// Right-hand side functionals.
pub enum Load<'a> {
    /// `(f, v)` on the vector P2 space.
    BodyForce(&'a dyn Fn([f64; 2], f64) -> [f64; 2]),
    /// `(g, q)` on the network space; the closure returns one value per network.
    Source(&'a dyn Fn([f64; 2], f64) -> Vec<f64>),
    /// `<h, v>` over edges with the given tags. The closure receives the
    /// point, the time and the outward unit normal.
    BoundaryTraction {
        tags: &'a [BoundaryTag],
        data: &'a dyn Fn([f64; 2], f64, [f64; 2]) -> [f64; 2],
    },
    /// `<l_i, q_i>` for one network over edges with the given tags.
    BoundaryFlux {
        network: usize,
        tags: &'a [BoundaryTag],
        data: &'a dyn Fn([f64; 2], f64, [f64; 2]) -> f64,
    },
}

/// Assembles a load functional at time `t`.
pub fn assemble_functional(load: &Load, space: &FeSpace, t: f64) -> Result<Vec<f64>> {
    let mesh = space.mesh().clone();
    let mut out = vec![0.0; space.n_dofs()];
    match load {
        Load::BodyForce(f) => {
            if space.kind() != SpaceKind::VectorP2 {
                return Err(Error::Argument("body force needs the vector P2 space".into()));
            }
            let tab = Tabulated::new(ElementKind::P2, LOAD_QUADRATURE)?;
            for k in 0..mesh.n_triangles() {
                let geom = ElementGeometry::new(mesh.triangle_coords(k));
                let dofs = space.dofmap().element(k);
                for (q, &l) in tab.rule.points.iter().enumerate() {
                    let w = tab.rule.weights[q] * 2.0 * geom.area;
                    let v = f(geom.point(l), t);
                    for c in 0..2 {
                        for a in 0..6 {
                            out[dofs[c * 6 + a]] += w * v[c] * tab.values[q][a];
                        }
                    }
                }
            }
        }
        Load::Source(g) => {
            let n = networks_of(space).ok_or_else(|| Error::Argument("source needs the network space".into()))?;
            let tab = Tabulated::new(ElementKind::P1, LOAD_QUADRATURE)?;
            for k in 0..mesh.n_triangles() {
                let geom = ElementGeometry::new(mesh.triangle_coords(k));
                let dofs = space.dofmap().element(k);
                for (q, &l) in tab.rule.points.iter().enumerate() {
                    let w = tab.rule.weights[q] * 2.0 * geom.area;
                    let v = g(geom.point(l), t);
                    if v.len() != n {
                        return Err(Error::Dimension { expected: n, got: v.len() });
                    }
                    for i in 0..n {
                        for a in 0..3 {
                            out[dofs[i * 3 + a]] += w * v[i] * tab.values[q][a];
                        }
                    }
                }
            }
        }
        Load::BoundaryTraction { tags, data } => {
            if space.kind() != SpaceKind::VectorP2 {
                return Err(Error::Argument("traction needs the vector P2 space".into()));
            }
            let nv = mesh.n_vertices();
            for &([a, b], tag) in mesh.boundary_edges() {
                if !tags.contains(&tag) {
                    continue;
                }
                let mid = nv + mesh.edge_id(a, b).expect("boundary edge is a mesh edge");
                let normal = mesh.outward_normal(a, b).expect("boundary edge is a mesh edge");
                let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
                let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
                for (s, w) in edge_rule() {
                    let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                    let h = data(x, t, normal);
                    let shape = [(a, (1.0 - s) * (1.0 - 2.0 * s)), (b, s * (2.0 * s - 1.0)), (mid, 4.0 * s * (1.0 - s))];
                    for (node, phi) in shape {
                        for c in 0..2 {
                            out[space.dof(c, node)] += w * len * h[c] * phi;
                        }
                    }
                }
            }
        }
        Load::BoundaryFlux { network, tags, data } => {
            let n = networks_of(space).ok_or_else(|| Error::Argument("flux needs the network space".into()))?;
            if *network >= n {
                return Err(Error::Argument(format!("network {network} out of range for {n} networks")));
            }
            for &([a, b], tag) in mesh.boundary_edges() {
                if !tags.contains(&tag) {
                    continue;
                }
                let normal = mesh.outward_normal(a, b).expect("boundary edge is a mesh edge");
                let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
                let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
                for (s, w) in edge_rule() {
                    let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                    let l = data(x, t, normal);
                    out[space.dof(*network, a)] += w * len * l * (1.0 - s);
                    out[space.dof(*network, b)] += w * len * l * s;
                }
            }
        }
    }
    Ok(out)
}
