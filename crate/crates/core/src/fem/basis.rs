/// Lagrange element type on triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    P1,
    P2,
}

impl ElementKind {
    pub fn n_local(self) -> usize {
        match self {
            ElementKind::P1 => 3,
            ElementKind::P2 => 6,
        }
    }
}

/// Gradients of the barycentric coordinates on the reference triangle
/// `(0,0), (1,0), (0,1)`.
pub const REFERENCE_GRAD_LAMBDA: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

/// Local P2 nodes: vertices 0, 1, 2 then the midpoints of edges
/// (0,1), (1,2), (2,0).
pub const P2_EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Basis values at barycentric point `l`.
pub fn basis_values(kind: ElementKind, l: [f64; 3], out: &mut [f64]) {
    match kind {
        ElementKind::P1 => out[..3].copy_from_slice(&l),
        ElementKind::P2 => {
            for i in 0..3 {
                out[i] = l[i] * (2.0 * l[i] - 1.0);
            }
            for (e, &(i, j)) in P2_EDGES.iter().enumerate() {
                out[3 + e] = 4.0 * l[i] * l[j];
            }
        }
    }
}

/// Basis gradients at barycentric point `l`, given the gradients of the
/// barycentric coordinates on the element.
pub fn basis_gradients(kind: ElementKind, l: [f64; 3], grad_lambda: &[[f64; 2]; 3], out: &mut [[f64; 2]]) {
    match kind {
        ElementKind::P1 => out[..3].copy_from_slice(grad_lambda),
        ElementKind::P2 => {
            for i in 0..3 {
                let s = 4.0 * l[i] - 1.0;
                out[i] = [s * grad_lambda[i][0], s * grad_lambda[i][1]];
            }
            for (e, &(i, j)) in P2_EDGES.iter().enumerate() {
                out[3 + e] = [
                    4.0 * (l[j] * grad_lambda[i][0] + l[i] * grad_lambda[j][0]),
                    4.0 * (l[j] * grad_lambda[i][1] + l[i] * grad_lambda[j][1]),
                ];
            }
        }
    }
}

/// Values and reference-triangle gradients at a barycentric point.
pub fn reference_basis(kind: ElementKind, l: [f64; 3]) -> (Vec<f64>, Vec<[f64; 2]>) {
    let n = kind.n_local();
    let mut v = vec![0.0; n];
    let mut g = vec![[0.0; 2]; n];
    basis_values(kind, l, &mut v);
    basis_gradients(kind, l, &REFERENCE_GRAD_LAMBDA, &mut g);
    (v, g)
}

/// Area and barycentric gradients of a physical triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub coords: [[f64; 2]; 3],
    pub area: f64,
    pub grad_lambda: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(coords: [[f64; 2]; 3]) -> Self {
        let [a, b, c] = coords;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        // grad l_i = rot(opposite edge) / det
        let grad_lambda = [
            [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
            [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
            [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
        ];
        Self { coords, area: 0.5 * det, grad_lambda }
    }

    pub fn point(&self, l: [f64; 3]) -> [f64; 2] {
        let [a, b, c] = self.coords;
        [
            l[0] * a[0] + l[1] * b[0] + l[2] * c[0],
            l[0] * a[1] + l[1] * b[1] + l[2] * c[1],
        ]
    }
}
