//! Closed-form two-network solution on the unit square and the loads it
//! induces.

use std::f64::consts::PI;

use std::sync::Arc;

use super::params::MpetParameters;
use super::problem::{BoundaryProgram, DisplacementBc, PressureBc, ProblemSpec};
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh};

/// Network amplitudes: `p_i = -m_i sin(pi x) sin(pi y) cos t`.
const AMPLITUDE: [f64; 2] = [1.0, 2.0];

/// Exact fields at one point and time.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactFields {
    pub u: [f64; 2],
    pub xi: f64,
    pub p: Vec<f64>,
}

/// Manufactured solution with
/// `u = sin t [w(x) + phi(x) (1, 1) / (mu + lambda)]`, where `w` is the
/// divergence-free rotation field and `phi = sin(pi x) sin(pi y)`, and
/// `p_1 = -phi cos t`, `p_2 = 2 p_1`. The total pressure follows as
/// `xi = alpha^T p - lambda div u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedCase {
    params: MpetParameters,
}

/// `phi`, its gradient, and the gradient of `phi_x + phi_y`.
struct Bump {
    phi: f64,
    grad: [f64; 2],
    div_dir: f64,
    grad_div_dir: [f64; 2],
}

fn bump(x: [f64; 2]) -> Bump {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    let phi = sx * sy;
    let grad = [PI * cx * sy, PI * sx * cy];
    let mixed = PI * PI * cx * cy;
    let lap_part = -PI * PI * phi;
    Bump {
        phi,
        grad,
        div_dir: grad[0] + grad[1],
        grad_div_dir: [lap_part + mixed, mixed + lap_part],
    }
}

impl ManufacturedCase {
    pub fn new(params: MpetParameters) -> Result<Self> {
        if params.networks() != 2 {
            return Err(Error::Argument(format!(
                "the manufactured solution has 2 networks, parameters describe {}",
                params.networks()
            )));
        }
        Ok(Self { params })
    }

    /// Case used by the accuracy tables: `E = 1`, `alpha = (1, 1)`,
    /// `beta_12 = 1`, uniform `K` and `c`.
    pub fn accuracy(poisson: f64, conductivity: f64, storage: f64) -> Result<Self> {
        Self::new(MpetParameters::accuracy(poisson, conductivity, storage)?)
    }

    pub fn params(&self) -> &MpetParameters {
        &self.params
    }

    fn kappa(&self) -> f64 {
        1.0 / (self.params.mu + self.params.lambda)
    }

    fn alpha_dot_m(&self) -> f64 {
        self.params.alpha.iter().zip(AMPLITUDE).map(|(a, m)| a * m).sum()
    }

    pub fn displacement(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let (s2x, c2x) = (2.0 * PI * x[0]).sin_cos();
        let (s2y, c2y) = (2.0 * PI * x[1]).sin_cos();
        let radial = self.kappa() * bump(x).phi;
        let s = t.sin();
        [s * (s2y * (c2x - 1.0) + radial), s * (s2x * (1.0 - c2y) + radial)]
    }

    /// Rows are components, columns are derivatives.
    pub fn displacement_gradient(&self, x: [f64; 2], t: f64) -> [[f64; 2]; 2] {
        let (s2x, c2x) = (2.0 * PI * x[0]).sin_cos();
        let (s2y, c2y) = (2.0 * PI * x[1]).sin_cos();
        let b = bump(x);
        let k = self.kappa();
        let s = t.sin();
        let tp = 2.0 * PI;
        [
            [s * (-tp * s2y * s2x + k * b.grad[0]), s * (tp * c2y * (c2x - 1.0) + k * b.grad[1])],
            [s * (tp * c2x * (1.0 - c2y) + k * b.grad[0]), s * (tp * s2x * s2y + k * b.grad[1])],
        ]
    }

    pub fn divergence(&self, x: [f64; 2], t: f64) -> f64 {
        t.sin() * self.kappa() * bump(x).div_dir
    }

    pub fn pressures(&self, x: [f64; 2], t: f64) -> Vec<f64> {
        let phi = bump(x).phi;
        AMPLITUDE.iter().map(|m| -m * phi * t.cos()).collect()
    }

    pub fn pressure_gradients(&self, x: [f64; 2], t: f64) -> Vec<[f64; 2]> {
        let g = bump(x).grad;
        AMPLITUDE.iter().map(|m| [-m * g[0] * t.cos(), -m * g[1] * t.cos()]).collect()
    }

    pub fn total_pressure(&self, x: [f64; 2], t: f64) -> f64 {
        let b = bump(x);
        -self.alpha_dot_m() * b.phi * t.cos() - self.params.lambda * t.sin() * self.kappa() * b.div_dir
    }

    pub fn total_pressure_gradient(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let b = bump(x);
        let am = self.alpha_dot_m();
        let ls = self.params.lambda * t.sin() * self.kappa();
        [
            -am * t.cos() * b.grad[0] - ls * b.grad_div_dir[0],
            -am * t.cos() * b.grad[1] - ls * b.grad_div_dir[1],
        ]
    }

    pub fn fields(&self, x: [f64; 2], t: f64) -> ExactFields {
        ExactFields {
            u: self.displacement(x, t),
            xi: self.total_pressure(x, t),
            p: self.pressures(x, t),
        }
    }

    /// `f = -2 mu div eps(u) + grad xi`.
    pub fn body_force(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let (s2x, c2x) = (2.0 * PI * x[0]).sin_cos();
        let (s2y, c2y) = (2.0 * PI * x[1]).sin_cos();
        let b = bump(x);
        let mu = self.params.mu;
        let k = self.kappa();
        let (s, c) = t.sin_cos();
        let am = self.alpha_dot_m();
        let fp2 = 4.0 * PI * PI;
        let lap_w = [-fp2 * s2y * (2.0 * c2x - 1.0), fp2 * s2x * (2.0 * c2y - 1.0)];
        // mu + lambda = 1 / kappa folds the grad-div terms of u and xi into one
        std::array::from_fn(|i| {
            -mu * s * lap_w[i] + 2.0 * PI * PI * mu * s * k * b.phi - s * b.grad_div_dir[i] - am * c * b.grad[i]
        })
    }

    /// `g_i = alpha_i div u_t + c_i (p_i)_t + sum_j beta_ij (p_i - p_j) - K_i lap p_i`.
    pub fn sources(&self, x: [f64; 2], t: f64) -> Vec<f64> {
        let b = bump(x);
        let (s, c) = t.sin_cos();
        let p = &self.params;
        let div_rate = c * self.kappa() * b.div_dir;
        (0..2)
            .map(|i| {
                let exchange: f64 = (0..2).map(|j| p.exchange[i][j] * -(AMPLITUDE[i] - AMPLITUDE[j]) * b.phi * c).sum();
                p.alpha[i] * div_rate + p.storage[i] * AMPLITUDE[i] * b.phi * s + exchange
                    - 2.0 * PI * PI * p.conductivity[i] * AMPLITUDE[i] * c * b.phi
            })
            .collect()
    }

    pub fn loads(&self, x: [f64; 2], t: f64) -> ([f64; 2], Vec<f64>) {
        (self.body_force(x, t), self.sources(x, t))
    }

    /// `(2 mu eps(u) - xi I) n`.
    pub fn traction(&self, x: [f64; 2], t: f64, n: [f64; 2]) -> [f64; 2] {
        let g = self.displacement_gradient(x, t);
        let xi = self.total_pressure(x, t);
        let mu = self.params.mu;
        let shear = mu * (g[0][1] + g[1][0]);
        let s = [[2.0 * mu * g[0][0] - xi, shear], [shear, 2.0 * mu * g[1][1] - xi]];
        [s[0][0] * n[0] + s[0][1] * n[1], s[1][0] * n[0] + s[1][1] * n[1]]
    }

    /// `K_i grad p_i . n`.
    pub fn flux(&self, network: usize, x: [f64; 2], t: f64, n: [f64; 2]) -> f64 {
        let g = self.pressure_gradients(x, t)[network];
        self.params.conductivity[network] * (g[0] * n[0] + g[1] * n[1])
    }

    /// Problem on `mesh` with exact Dirichlet data on `dirichlet` and exact
    /// traction and flux on every other boundary part.
    pub fn problem(&self, mesh: Arc<Mesh>, final_time: f64, dirichlet: &[BoundaryTag]) -> Result<ProblemSpec> {
        let case = Arc::new(self.clone());
        let mut boundary = BoundaryProgram::new(2);
        for tag in mesh.tags() {
            if dirichlet.contains(&tag) {
                let c = case.clone();
                boundary.set_displacement(tag, DisplacementBc::Fixed(Arc::new(move |x, t| c.displacement(x, t))));
                for i in 0..2 {
                    let c = case.clone();
                    boundary.set_pressure(i, tag, PressureBc::Fixed(Arc::new(move |x, t| c.pressures(x, t)[i])))?;
                }
            } else {
                let c = case.clone();
                boundary.set_displacement(tag, DisplacementBc::Traction(Arc::new(move |x, t, n| c.traction(x, t, n))));
                for i in 0..2 {
                    let c = case.clone();
                    boundary.set_pressure(i, tag, PressureBc::Flux(Arc::new(move |x, t, n| c.flux(i, x, t, n))))?;
                }
            }
        }
        let (cf, cg, cp) = (case.clone(), case.clone(), case);
        Ok(ProblemSpec::new(mesh, self.params.clone(), boundary, final_time)?
            .with_body_force(Arc::new(move |x, t| cf.body_force(x, t)))
            .with_source(Arc::new(move |x, t| cg.sources(x, t)))
            .with_initial_pressure(Arc::new(move |x, _| cp.pressures(x, 0.0))))
    }
}
