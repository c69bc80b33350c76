//! Minimal double-double arithmetic (about 32 significant digits), enough
//! to evaluate trigonometric fields and finite differences without the
//! roundoff of plain f64.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

pub const PI: Dd = Dd {
    hi: 3.141_592_653_589_793,
    lo: 1.224_646_799_147_353_2e-16,
};

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn scale(self, k: f64) -> Self {
        self * Dd::new(k)
    }

    /// `sin` and `cos` by reduction modulo `pi/2` and Taylor series.
    pub fn sin_cos(self) -> (Dd, Dd) {
        let half_pi = PI * Dd::new(0.5);
        let k = (self.hi / half_pi.hi).round();
        let r = self - half_pi.scale(k);
        let r2 = r * r;
        // sin r = r - r^3/3! + ..., cos r = 1 - r^2/2! + ...
        let (mut s, mut c) = (r, Dd::ONE);
        let (mut ts, mut tc) = (r, Dd::ONE);
        let mut n = 1.0;
        loop {
            tc = -(tc * r2) / Dd::new(n * (n + 1.0));
            ts = -(ts * r2) / Dd::new((n + 1.0) * (n + 2.0));
            c = c + tc;
            s = s + ts;
            n += 2.0;
            if tc.hi.abs() < 1e-34 && ts.hi.abs() < 1e-34 {
                break;
            }
        }
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    pub fn sin(self) -> Dd {
        self.sin_cos().0
    }

    pub fn cos(self) -> Dd {
        self.sin_cos().1
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::new(x)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::renorm(s, e + f)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        Dd::renorm(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::new(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::new(q2);
        let q3 = r.hi / b.hi;
        let (q, e) = quick_two_sum(q1, q2);
        Dd { hi: q, lo: e } + Dd::new(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_beyond_f64() {
        let third = Dd::ONE / Dd::new(3.0);
        let back = third * Dd::new(3.0) - Dd::ONE;
        assert!(back.to_f64().abs() < 1e-31);
        let tiny = (Dd::ONE + Dd::new(1e-20)) - Dd::ONE;
        assert!((tiny.to_f64() - 1e-20).abs() < 1e-35);
    }

    #[test]
    fn trig_identities() {
        for i in 0..50 {
            let x = Dd::new(-7.0 + 0.29 * i as f64);
            let (s, c) = x.sin_cos();
            let one = s * s + c * c - Dd::ONE;
            assert!(one.to_f64().abs() < 1e-30, "{x:?}");
            assert!((s.to_f64() - x.hi.sin()).abs() < 1e-15);
            // sin(2x) = 2 sin x cos x
            let d = (x + x).sin() - Dd::new(2.0) * s * c;
            assert!(d.to_f64().abs() < 1e-30);
        }
        assert!(PI.sin().to_f64().abs() < 1e-31);
        assert!((PI.scale(0.5).sin() - Dd::ONE).to_f64().abs() < 1e-31);
    }
}
