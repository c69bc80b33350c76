//! Finite-difference check of the manufactured loads. The exact fields are
//! transcribed here a second time, independently of the library, and
//! evaluated in double-double precision so that second differences with
//! step 1e-5 are not swamped by roundoff.

use mpet_core::model::ManufacturedCase;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ddouble::{Dd, PI};

pub const STEP: f64 = 1e-5;

/// The eight coefficient combinations of the accuracy tables:
/// `(poisson, conductivity, storage)`.
pub const TABLE_PARAMETERS: [(f64, f64, f64); 8] = [
    (0.3, 1.0, 1.0),
    (0.3, 1.0, 0.0),
    (0.3, 1e-6, 1.0),
    (0.3, 1e-6, 0.0),
    (0.49999, 1.0, 1.0),
    (0.49999, 1.0, 0.0),
    (0.49999, 1e-6, 1.0),
    (0.49999, 1e-6, 0.0),
];

struct Exact {
    lambda: Dd,
    mu: Dd,
    alpha: [Dd; 2],
    storage: [Dd; 2],
    conductivity: [Dd; 2],
    beta: Dd,
}

impl Exact {
    fn new(poisson: f64, conductivity: f64, storage: f64) -> Self {
        let (e, nu) = (Dd::ONE, Dd::new(poisson));
        let lambda = nu * e / ((Dd::ONE + nu) * (Dd::ONE - Dd::new(2.0) * nu));
        let mu = e / (Dd::new(2.0) * (Dd::ONE + nu));
        Exact {
            lambda,
            mu,
            alpha: [Dd::ONE; 2],
            storage: [Dd::new(storage); 2],
            conductivity: [Dd::new(conductivity); 2],
            beta: Dd::ONE,
        }
    }

    fn u(&self, x: Dd, y: Dd, t: Dd) -> [Dd; 2] {
        let two_pi = PI.scale(2.0);
        let bump = (PI * x).sin() * (PI * y).sin() / (self.mu + self.lambda);
        let s = t.sin();
        [
            s * ((two_pi * y).sin() * ((two_pi * x).cos() - Dd::ONE) + bump),
            s * ((two_pi * x).sin() * (Dd::ONE - (two_pi * y).cos()) + bump),
        ]
    }

    fn div_u(&self, x: Dd, y: Dd, t: Dd) -> Dd {
        let two_pi = PI.scale(2.0);
        let dx_u1 = -two_pi * (two_pi * y).sin() * (two_pi * x).sin()
            + PI * (PI * x).cos() * (PI * y).sin() / (self.mu + self.lambda);
        let dy_u2 = two_pi * (two_pi * x).sin() * (two_pi * y).sin()
            + PI * (PI * x).sin() * (PI * y).cos() / (self.mu + self.lambda);
        t.sin() * (dx_u1 + dy_u2)
    }

    fn p(&self, x: Dd, y: Dd, t: Dd) -> [Dd; 2] {
        let p1 = -((PI * x).sin() * (PI * y).sin() * t.cos());
        [p1, p1.scale(2.0)]
    }

    fn xi(&self, x: Dd, y: Dd, t: Dd) -> Dd {
        let p = self.p(x, y, t);
        self.alpha[0] * p[0] + self.alpha[1] * p[1] - self.lambda * self.div_u(x, y, t)
    }
}

/// Largest residual magnitudes `(momentum, total pressure, network)` over
/// `samples` random interior points and times in `[0, 1]`.
pub fn load_residuals(poisson: f64, conductivity: f64, storage: f64, samples: usize, seed: u64) -> [f64; 3] {
    load_residuals_with_library_poisson(poisson, poisson, conductivity, storage, samples, seed)
}

/// As [`load_residuals`], but the library loads are built with a possibly
/// different Poisson ratio (used to show the check has teeth).
pub fn load_residuals_with_library_poisson(
    poisson: f64,
    library_poisson: f64,
    conductivity: f64,
    storage: f64,
    samples: usize,
    seed: u64,
) -> [f64; 3] {
    let case = ManufacturedCase::accuracy(library_poisson, conductivity, storage).expect("valid parameters");
    let ex = Exact::new(poisson, conductivity, storage);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = Dd::new(STEP);
    let hh = h * h;
    let two = Dd::new(2.0);
    let mut worst = [0.0f64; 3];
    for _ in 0..samples {
        let (xf, yf, tf) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let (x, y, t) = (Dd::new(xf), Dd::new(yf), Dd::new(tf));
        let u = |dx: f64, dy: f64, tt: Dd| ex.u(x + h.scale(dx), y + h.scale(dy), tt);

        // -2 mu div eps(u) = -mu (lap u + grad div u)
        let c = u(0.0, 0.0, t);
        let (e, w, n, s) = (u(1.0, 0.0, t), u(-1.0, 0.0, t), u(0.0, 1.0, t), u(0.0, -1.0, t));
        let (ne, nw, se, sw) = (u(1.0, 1.0, t), u(-1.0, 1.0, t), u(1.0, -1.0, t), u(-1.0, -1.0, t));
        let lap = |i: usize| (e[i] + w[i] + n[i] + s[i] - c[i].scale(4.0)) / hh;
        let cross = |i: usize| (ne[i] - se[i] - nw[i] + sw[i]) / (hh.scale(4.0));
        let grad_div = [(e[0] - two * c[0] + w[0]) / hh + cross(1), (n[1] - two * c[1] + s[1]) / hh + cross(0)];
        let grad_xi = [
            (ex.xi(x + h, y, t) - ex.xi(x - h, y, t)) / (two * h),
            (ex.xi(x, y + h, t) - ex.xi(x, y - h, t)) / (two * h),
        ];
        let f = case.body_force([xf, yf], tf);
        for i in 0..2 {
            let r = -ex.mu * (lap(i) + grad_div[i]) + grad_xi[i] - Dd::new(f[i]);
            worst[0] = worst[0].max(r.to_f64().abs());
        }

        // xi = alpha^T p - lambda div u with div u by differences
        let div_fd = |tt: Dd| (u(1.0, 0.0, tt)[0] - u(-1.0, 0.0, tt)[0] + u(0.0, 1.0, tt)[1] - u(0.0, -1.0, tt)[1]) / (two * h);
        let p = ex.p(x, y, t);
        let r = ex.lambda * div_fd(t) + Dd::new(case.total_pressure([xf, yf], tf)) - (ex.alpha[0] * p[0] + ex.alpha[1] * p[1]);
        worst[1] = worst[1].max(r.to_f64().abs());

        // alpha_i div u_t + c_i (p_i)_t + sum_j beta_ij (p_i - p_j) - K_i lap p_i = g_i
        let div_rate = (div_fd(t + h) - div_fd(t - h)) / (two * h);
        let (pf, pb) = (ex.p(x, y, t + h), ex.p(x, y, t - h));
        let pe = ex.p(x + h, y, t);
        let pw = ex.p(x - h, y, t);
        let pn = ex.p(x, y + h, t);
        let ps = ex.p(x, y - h, t);
        let g = case.sources([xf, yf], tf);
        for i in 0..2 {
            let j = 1 - i;
            let lap_p = (pe[i] + pw[i] + pn[i] + ps[i] - p[i].scale(4.0)) / hh;
            let r = ex.alpha[i] * div_rate + ex.storage[i] * (pf[i] - pb[i]) / (two * h) + ex.beta * (p[i] - p[j])
                - ex.conductivity[i] * lap_p
                - Dd::new(g[i]);
            worst[2] = worst[2].max(r.to_f64().abs());
        }
    }
    worst
}
