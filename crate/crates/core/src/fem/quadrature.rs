use crate::error::{Error, Result};

/// Symmetric quadrature on the reference triangle.
///
/// Points are barycentric `(l0, l1, l2)`; weights sum to the reference area
/// 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

fn orbit3(a: f64, w: f64, pts: &mut Vec<[f64; 3]>, wts: &mut Vec<f64>) {
    let b = 1.0 - 2.0 * a;
    for p in [[a, a, b], [a, b, a], [b, a, a]] {
        pts.push(p);
        wts.push(0.5 * w);
    }
}

fn orbit6(a: f64, b: f64, w: f64, pts: &mut Vec<[f64; 3]>, wts: &mut Vec<f64>) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [b, a, c], [a, c, b], [c, a, b], [b, c, a], [c, b, a]] {
        pts.push(p);
        wts.push(0.5 * w);
    }
}

/// Rule exact for all polynomials of total degree `degree` (1 to 6).
pub fn quadrature_rule(degree: usize) -> Result<QuadratureRule> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let exact = match degree {
        1 => {
            points.push([1.0 / 3.0; 3]);
            weights.push(0.5);
            1
        }
        2 => {
            orbit3(1.0 / 6.0, 1.0 / 3.0, &mut points, &mut weights);
            2
        }
        3 | 4 => {
            orbit3(0.445_948_490_915_964_9, 0.223_381_589_678_011_47, &mut points, &mut weights);
            orbit3(0.091_576_213_509_770_74, 0.109_951_743_655_321_87, &mut points, &mut weights);
            4
        }
        5 => {
            let s = 15f64.sqrt();
            points.push([1.0 / 3.0; 3]);
            weights.push(0.5 * 9.0 / 40.0);
            orbit3((6.0 - s) / 21.0, (155.0 - s) / 1200.0, &mut points, &mut weights);
            orbit3((6.0 + s) / 21.0, (155.0 + s) / 1200.0, &mut points, &mut weights);
            5
        }
        6 => {
            orbit3(0.063_089_014_491_502_23, 0.050_844_906_370_206_82, &mut points, &mut weights);
            orbit3(0.249_286_745_170_910_42, 0.116_786_275_726_379_37, &mut points, &mut weights);
            orbit6(
                0.053_145_049_844_816_95,
                0.310_352_451_033_784_4,
                0.082_851_075_618_373_58,
                &mut points,
                &mut weights,
            );
            6
        }
        _ => return Err(Error::Argument(format!("no triangle quadrature of degree {degree}"))),
    };
    Ok(QuadratureRule { points, weights, degree: exact })
}

/// Three-point Gauss-Legendre rule on [0, 1]: `(parameter, weight)` pairs,
/// exact to degree 5.
pub fn edge_rule() -> [(f64, f64); 3] {
    let d = 0.5 * (0.6f64).sqrt();
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}
