//! Conforming triangulations with tagged boundary edges.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Geometric label of a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// Unit square side x = 1.
    Gamma1,
    /// Unit square side y = 0.
    Gamma2,
    /// Unit square side x = 0.
    Gamma3,
    /// Unit square side y = 1.
    Gamma4,
    /// Outer (skull) boundary of the annulus.
    GammaS,
    /// Inner (ventricle) boundary of the annulus.
    GammaV,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 6] = [
        BoundaryTag::Gamma1,
        BoundaryTag::Gamma2,
        BoundaryTag::Gamma3,
        BoundaryTag::Gamma4,
        BoundaryTag::GammaS,
        BoundaryTag::GammaV,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Gamma1 => "Gamma1",
            BoundaryTag::Gamma2 => "Gamma2",
            BoundaryTag::Gamma3 => "Gamma3",
            BoundaryTag::Gamma4 => "Gamma4",
            BoundaryTag::GammaS => "GammaS",
            BoundaryTag::GammaV => "GammaV",
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gamma1" => Ok(BoundaryTag::Gamma1),
            "gamma2" => Ok(BoundaryTag::Gamma2),
            "gamma3" => Ok(BoundaryTag::Gamma3),
            "gamma4" => Ok(BoundaryTag::Gamma4),
            "gammas" | "skull" => Ok(BoundaryTag::GammaS),
            "gammav" | "ventricle" => Ok(BoundaryTag::GammaV),
            _ => Err(Error::Argument(format!("unknown boundary tag '{s}'"))),
        }
    }
}

/// Triangle mesh. Triangles are counterclockwise; every edge of the mesh has
/// a global index, and each triangle records its edges in the local order
/// (v0,v1), (v1,v2), (v2,v0).
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<([usize; 2], BoundaryTag)>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    edge_lookup: HashMap<(usize, usize), usize>,
    // first triangle using each edge
    edge_owner: Vec<usize>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Builds and validates a mesh.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<([usize; 2], BoundaryTag)>,
    ) -> Result<Self> {
        let nv = vertices.len();
        for t in &triangles {
            if t.iter().any(|&v| v >= nv) {
                return Err(Error::Structure(format!("triangle {t:?} references a missing vertex")));
            }
        }
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        let mut uses: Vec<usize> = Vec::new();
        let mut edge_owner = Vec::new();
        for (k, t) in triangles.iter().enumerate() {
            let mut te = [0usize; 3];
            for (l, &(a, b)) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])].iter().enumerate() {
                let key = edge_key(a, b);
                let id = *index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    uses.push(0);
                    edge_owner.push(k);
                    edges.len() - 1
                });
                uses[id] += 1;
                te[l] = id;
            }
            triangle_edges.push(te);
        }
        let mut mesh = Self {
            vertices,
            triangles,
            boundary,
            edges,
            triangle_edges,
            edge_lookup: HashMap::new(),
            edge_owner,
        };

        for (k, t) in mesh.triangles.iter().enumerate() {
            if mesh.signed_area(k) <= 0.0 {
                return Err(Error::Structure(format!("triangle {k} {t:?} has non-positive area")));
            }
        }
        if let Some(id) = uses.iter().position(|&u| u > 2) {
            return Err(Error::Structure(format!("edge {:?} shared by more than two triangles", mesh.edges[id])));
        }
        let mut tagged: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
        for &([a, b], tag) in &mesh.boundary {
            let key = edge_key(a, b);
            match index.get(&key) {
                Some(&id) if uses[id] == 1 => {}
                _ => {
                    return Err(Error::Structure(format!("boundary edge ({a}, {b}) is not a boundary edge of the mesh")))
                }
            }
            if tagged.insert(key, tag).is_some() {
                return Err(Error::Structure(format!("boundary edge ({a}, {b}) tagged twice")));
            }
        }
        let open = uses.iter().filter(|&&u| u == 1).count();
        if open != tagged.len() {
            return Err(Error::Structure(format!(
                "{open} boundary edges in the mesh but {} carry a tag",
                tagged.len()
            )));
        }
        // closed loops: each boundary vertex meets exactly two boundary edges
        let mut degree: HashMap<usize, usize> = HashMap::new();
        for &([a, b], _) in &mesh.boundary {
            *degree.entry(a).or_default() += 1;
            *degree.entry(b).or_default() += 1;
        }
        if let Some((v, _)) = degree.iter().find(|(_, &d)| d != 2) {
            return Err(Error::Structure(format!("boundary is not a union of closed loops at vertex {v}")));
        }
        mesh.edge_lookup = index;
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[([usize; 2], BoundaryTag)] {
        &self.boundary
    }

    /// All edges as sorted vertex pairs, in global edge order.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_coords(&self, k: usize) -> [[f64; 2]; 3] {
        let t = self.triangles[k];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn signed_area(&self, k: usize) -> f64 {
        let [a, b, c] = self.triangle_coords(k);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn area(&self) -> f64 {
        (0..self.n_triangles()).map(|k| self.signed_area(k)).sum()
    }

    /// Longest edge length.
    pub fn h_max(&self) -> f64 {
        self.edges
            .iter()
            .map(|&[a, b]| dist(self.vertices[a], self.vertices[b]))
            .fold(0.0, f64::max)
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        let mut min = 180.0f64;
        for k in 0..self.n_triangles() {
            let p = self.triangle_coords(k);
            for i in 0..3 {
                let a = p[i];
                let b = p[(i + 1) % 3];
                let c = p[(i + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (norm(u) * norm(v));
                min = min.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        min
    }

    /// Tags present on the boundary, sorted.
    pub fn tags(&self) -> Vec<BoundaryTag> {
        let mut t: Vec<_> = self.boundary.iter().map(|&(_, g)| g).collect();
        t.sort();
        t.dedup();
        t
    }

    /// Boundary edges carrying `tag`, in stored order.
    pub fn boundary_edges_with_tag(&self, tag: BoundaryTag) -> Vec<[usize; 2]> {
        self.boundary.iter().filter(|&&(_, g)| g == tag).map(|&(e, _)| e).collect()
    }

    /// Like [`Mesh::boundary_edges_with_tag`] but with the tag given by name.
    pub fn boundary_edges_named(&self, name: &str) -> Result<Vec<[usize; 2]>> {
        Ok(self.boundary_edges_with_tag(name.parse()?))
    }

    /// Global index of the edge joining two vertices.
    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&edge_key(a, b)).copied()
    }

    /// A triangle containing the given edge.
    pub fn edge_owner(&self, edge: usize) -> usize {
        self.edge_owner[edge]
    }

    /// Unit normal of edge `(a, b)` pointing away from its owning triangle.
    pub fn outward_normal(&self, a: usize, b: usize) -> Option<[f64; 2]> {
        let e = self.edge_id(a, b)?;
        let t = self.triangles[self.edge_owner[e]];
        let c = t.iter().copied().find(|&v| v != a && v != b)?;
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let d = [pb[0] - pa[0], pb[1] - pa[1]];
        let len = norm(d);
        let mut n = [d[1] / len, -d[0] / len];
        if n[0] * (pc[0] - pa[0]) + n[1] * (pc[1] - pa[1]) > 0.0 {
            n = [-n[0], -n[1]];
        }
        Some(n)
    }

    /// Triangle containing `p` and the barycentric coordinates of `p` in it.
    /// Points on shared edges resolve to the lowest-numbered triangle.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let tol = 1e-12;
        for k in 0..self.n_triangles() {
            let l = self.barycentric(k, p);
            if l.iter().all(|&v| v >= -tol) {
                return Some((k, l));
            }
        }
        None
    }

    pub fn barycentric(&self, k: usize, p: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.triangle_coords(k);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Plain-text export: `v x y`, `t i j k` and `b i j tag` lines.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::new();
        for v in &self.vertices {
            s.push_str(&format!("v {:.17e} {:.17e}\n", v[0], v[1]));
        }
        for t in &self.triangles {
            s.push_str(&format!("t {} {} {}\n", t[0], t[1], t[2]));
        }
        for ([a, b], tag) in &self.boundary {
            s.push_str(&format!("b {a} {b} {tag}\n"));
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let mut boundary = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.is_empty() || f[0].starts_with('#') {
                continue;
            }
            let bad = || Error::Structure(format!("malformed mesh line {}: '{line}'", lineno + 1));
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            let idx = |s: &str| s.parse::<usize>().map_err(|_| bad());
            match (f[0], f.len()) {
                ("v", 3) => vertices.push([num(f[1])?, num(f[2])?]),
                ("t", 4) => triangles.push([idx(f[1])?, idx(f[2])?, idx(f[3])?]),
                ("b", 4) => boundary.push(([idx(f[1])?, idx(f[2])?], f[3].parse()?)),
                _ => return Err(bad()),
            }
        }
        Mesh::new(vertices, triangles, boundary)
    }
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Uniform triangulation of the unit square with `n` cells per side, every
/// cell split along its bottom-left to top-right diagonal.
pub fn unit_square_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::Argument("unit square needs at least one subdivision".into()));
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // exact endpoints
            let x = if i == n { 1.0 } else { i as f64 * h };
            let y = if j == n { 1.0 } else { j as f64 * h };
            vertices.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut boundary = Vec::with_capacity(4 * n);
    for i in 0..n {
        boundary.push(([id(i, 0), id(i + 1, 0)], BoundaryTag::Gamma2));
    }
    for j in 0..n {
        boundary.push(([id(n, j), id(n, j + 1)], BoundaryTag::Gamma1));
    }
    for i in (0..n).rev() {
        boundary.push(([id(i + 1, n), id(i, n)], BoundaryTag::Gamma4));
    }
    for j in (0..n).rev() {
        boundary.push(([id(0, j + 1), id(0, j)], BoundaryTag::Gamma3));
    }
    Mesh::new(vertices, triangles, boundary)
}

/// Splits every triangle into four by joining edge midpoints. The midpoint of
/// global edge `e` becomes vertex `n_vertices + e`.
pub fn refine_uniform(m: &Mesh) -> Result<Mesh> {
    let nv = m.n_vertices();
    let mut vertices = m.vertices.clone();
    for &[a, b] in &m.edges {
        let (pa, pb) = (m.vertices[a], m.vertices[b]);
        vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
    }
    let mut triangles = Vec::with_capacity(4 * m.n_triangles());
    for (t, e) in m.triangles.iter().zip(&m.triangle_edges) {
        let (m01, m12, m20) = (nv + e[0], nv + e[1], nv + e[2]);
        triangles.push([t[0], m01, m20]);
        triangles.push([m01, t[1], m12]);
        triangles.push([m20, m12, t[2]]);
        triangles.push([m01, m12, m20]);
    }
    let mut boundary = Vec::with_capacity(2 * m.boundary.len());
    for &([a, b], tag) in &m.boundary {
        let mid = nv + m.edge_id(a, b).expect("boundary edges belong to the mesh");
        boundary.push(([a, mid], tag));
        boundary.push(([mid, b], tag));
    }
    Mesh::new(vertices, triangles, boundary)
}

/// Structured polar triangulation of the annulus `r_inner <= r <= r_outer`.
/// The inner loop is tagged `GammaV`, the outer loop `GammaS`.
pub fn annulus_mesh(r_inner: f64, r_outer: f64, n_radial: usize, n_angular: usize) -> Result<Mesh> {
    if !(r_inner > 0.0 && r_inner < r_outer) {
        return Err(Error::Argument(format!("annulus radii must satisfy 0 < r_inner < r_outer, got {r_inner}, {r_outer}")));
    }
    if n_radial < 1 {
        return Err(Error::Argument("annulus needs at least one radial layer".into()));
    }
    if n_angular < 8 {
        return Err(Error::Argument("annulus needs at least 8 angular sectors".into()));
    }
    let id = |ir: usize, ia: usize| ir * n_angular + ia % n_angular;
    let mut vertices = Vec::with_capacity((n_radial + 1) * n_angular);
    for ir in 0..=n_radial {
        let r = if ir == n_radial {
            r_outer
        } else {
            r_inner + (r_outer - r_inner) * ir as f64 / n_radial as f64
        };
        for ia in 0..n_angular {
            let th = 2.0 * std::f64::consts::PI * ia as f64 / n_angular as f64;
            vertices.push([r * th.cos(), r * th.sin()]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n_radial * n_angular);
    for ir in 0..n_radial {
        for ia in 0..n_angular {
            let (a, b, c, d) = (id(ir, ia), id(ir + 1, ia), id(ir + 1, ia + 1), id(ir, ia + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut boundary = Vec::with_capacity(2 * n_angular);
    for ia in 0..n_angular {
        boundary.push(([id(0, ia + 1), id(0, ia)], BoundaryTag::GammaV));
    }
    for ia in 0..n_angular {
        boundary.push(([id(n_radial, ia), id(n_radial, ia + 1)], BoundaryTag::GammaS));
    }
    Mesh::new(vertices, triangles, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_square() {
        let m = unit_square_mesh(1).unwrap();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_triangles(), 2);
        assert_eq!(m.boundary_edges().len(), 4);
        assert_eq!(m.boundary_edges_with_tag(BoundaryTag::Gamma2).len(), 1);
    }

    #[test]
    fn square_counts() {
        let m = unit_square_mesh(8).unwrap();
        assert_eq!(m.n_vertices(), 81);
        assert_eq!(m.n_triangles(), 128);
        assert_eq!(m.boundary_edges().len(), 32);
        for tag in [BoundaryTag::Gamma1, BoundaryTag::Gamma2, BoundaryTag::Gamma3, BoundaryTag::Gamma4] {
            assert_eq!(m.boundary_edges_with_tag(tag).len(), 8);
        }
        assert!((m.h_max() - 2f64.sqrt() / 8.0).abs() < 1e-15);
        assert!((m.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(matches!(unit_square_mesh(0), Err(Error::Argument(_))));
    }

    #[test]
    fn side_tags_match_geometry() {
        let m = unit_square_mesh(4).unwrap();
        for ([a, b], tag) in m.boundary_edges() {
            let (pa, pb) = (m.vertices()[*a], m.vertices()[*b]);
            let on = |f: &dyn Fn([f64; 2]) -> bool| f(pa) && f(pb);
            let ok = match tag {
                BoundaryTag::Gamma1 => on(&|p| p[0] == 1.0),
                BoundaryTag::Gamma2 => on(&|p| p[1] == 0.0),
                BoundaryTag::Gamma3 => on(&|p| p[0] == 0.0),
                BoundaryTag::Gamma4 => on(&|p| p[1] == 1.0),
                _ => false,
            };
            assert!(ok, "{tag} edge at {pa:?}-{pb:?}");
        }
    }

    #[test]
    fn refine_two_triangles() {
        let m = refine_uniform(&unit_square_mesh(1).unwrap()).unwrap();
        assert_eq!(m.n_triangles(), 8);
        assert_eq!(m.n_vertices(), 9);
        assert_eq!(m.boundary_edges().len(), 8);
    }

    fn canonical(m: &Mesh) -> Vec<[i64; 6]> {
        let q = |x: f64| (x * 1024.0).round() as i64;
        let mut out: Vec<[i64; 6]> = (0..m.n_triangles())
            .map(|k| {
                let mut p: Vec<[i64; 2]> = m.triangle_coords(k).iter().map(|v| [q(v[0]), q(v[1])]).collect();
                p.sort();
                [p[0][0], p[0][1], p[1][0], p[1][1], p[2][0], p[2][1]]
            })
            .collect();
        out.sort();
        out
    }

    #[test]
    fn refinement_reproduces_structured_mesh() {
        let mut m = unit_square_mesh(2).unwrap();
        for _ in 0..2 {
            m = refine_uniform(&m).unwrap();
        }
        assert_eq!(canonical(&m), canonical(&unit_square_mesh(8).unwrap()));
    }

    #[test]
    fn four_refinements_of_eight() {
        let mut m = unit_square_mesh(8).unwrap();
        let angle = m.min_angle_degrees();
        for _ in 0..4 {
            m = refine_uniform(&m).unwrap();
            assert!((m.min_angle_degrees() - angle).abs() < 1e-9);
        }
        assert_eq!(m.n_triangles(), 2 * 128 * 128);
        assert_eq!(m.n_vertices(), 129 * 129);
        assert!((m.h_max() - 2f64.sqrt() / 128.0).abs() < 1e-15);
        assert_eq!(m.boundary_edges_with_tag(BoundaryTag::Gamma3).len(), 128);
    }

    #[test]
    fn annulus_smallest() {
        let m = annulus_mesh(30.0, 70.0, 1, 8).unwrap();
        assert_eq!(m.n_vertices(), 16);
        assert_eq!(m.n_triangles(), 16);
        assert_eq!(m.boundary_edges_with_tag(BoundaryTag::GammaV).len(), 8);
        assert_eq!(m.boundary_edges_with_tag(BoundaryTag::GammaS).len(), 8);
    }

    #[test]
    fn annulus_default_geometry() {
        let m = annulus_mesh(30.0, 70.0, 8, 64).unwrap();
        assert_eq!(m.boundary_edges_with_tag(BoundaryTag::GammaV).len(), 64);
        let exact = std::f64::consts::PI * (70.0f64.powi(2) - 30.0f64.powi(2));
        assert!((m.area() - exact).abs() / exact < 0.01);
        assert!(m.min_angle_degrees() >= 20.0);
        assert!(m.boundary_edges_with_tag(BoundaryTag::Gamma1).is_empty());
    }

    #[test]
    fn annulus_argument_errors() {
        assert!(annulus_mesh(70.0, 30.0, 1, 8).is_err());
        assert!(annulus_mesh(30.0, 70.0, 0, 8).is_err());
        assert!(annulus_mesh(30.0, 70.0, 1, 7).is_err());
    }

    #[test]
    fn unknown_tag_name() {
        let m = unit_square_mesh(1).unwrap();
        assert!(matches!(m.boundary_edges_named("Gamma9"), Err(Error::Argument(_))));
        assert_eq!(m.boundary_edges_named("gamma1").unwrap().len(), 1);
        assert_eq!(m.boundary_edges_named("ventricle").unwrap().len(), 0);
    }

    #[test]
    fn text_round_trip() {
        let m = annulus_mesh(1.0, 2.0, 2, 8).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().any(|l| l.starts_with("b ") && l.ends_with("GammaV")));
        assert_eq!(Mesh::read_text(std::io::Cursor::new(buf)).unwrap(), m);
    }

    #[test]
    fn validation_catches_clockwise_triangle() {
        let err = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 2, 1]], vec![]).unwrap_err();
        assert!(matches!(err, Error::Structure(_)));
    }

    #[test]
    fn validation_catches_untagged_boundary() {
        let err = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], vec![]).unwrap_err();
        assert!(matches!(err, Error::Structure(_)));
    }

    #[test]
    fn normals_point_outward() {
        let m = annulus_mesh(1.0, 2.0, 2, 16).unwrap();
        for ([a, b], tag) in m.boundary_edges() {
            let n = m.outward_normal(*a, *b).unwrap();
            let p = m.vertices()[*a];
            let radial = n[0] * p[0] + n[1] * p[1];
            match tag {
                BoundaryTag::GammaS => assert!(radial > 0.0),
                _ => assert!(radial < 0.0),
            }
        }
        let sq = unit_square_mesh(2).unwrap();
        for [a, b] in sq.boundary_edges_with_tag(BoundaryTag::Gamma1) {
            assert_eq!(sq.outward_normal(a, b).unwrap(), [1.0, 0.0]);
        }
    }

    #[test]
    fn locate_vertex_and_interior() {
        let m = unit_square_mesh(4).unwrap();
        let (k, l) = m.locate([0.3, 0.6]).unwrap();
        let p = m.triangle_coords(k);
        let x = l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0];
        assert!((x - 0.3).abs() < 1e-14);
        assert!(m.locate([1.5, 0.5]).is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn refinement_quadruples_and_conserves_area(n in 1usize..6, rounds in 1usize..3) {
                let mut m = unit_square_mesh(n).unwrap();
                for _ in 0..rounds {
                    let next = refine_uniform(&m).unwrap();
                    prop_assert_eq!(next.n_triangles(), 4 * m.n_triangles());
                    prop_assert_eq!(next.n_vertices(), m.n_vertices() + m.n_edges());
                    prop_assert_eq!(next.boundary_edges().len(), 2 * m.boundary_edges().len());
                    m = next;
                }
                prop_assert!((m.area() - 1.0).abs() < 1e-13);
            }

            #[test]
            fn annulus_is_valid(nr in 1usize..5, na in 8usize..40, ri in 1.0f64..10.0, gap in 1.0f64..10.0) {
                let m = annulus_mesh(ri, ri + gap, nr, na).unwrap();
                prop_assert_eq!(m.n_triangles(), 2 * nr * na);
                prop_assert_eq!(m.boundary_edges_with_tag(BoundaryTag::GammaS).len(), na);
            }
        }
    }
}
