use super::sparse::{dot, norm2, SparseMatrix};
use crate::error::{Error, Result};

/// Jacobi-preconditioned conjugate gradients for symmetric positive definite
/// systems.
///
/// Returns the solution and the number of iterations. The stopping test is on
/// the true residual `||b - A x|| <= tol ||b||`. Breakdown on a non-positive
/// curvature direction is reported as non-convergence rather than returning a
/// wrong answer.
pub fn cg_solve(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    cg_solve_from(a, b, None, tol, max_iter)
}

/// Same as [`cg_solve`] with an optional starting guess.
pub fn cg_solve_from(
    a: &SparseMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = a.n_rows();
    if !a.is_square() {
        return Err(Error::Dimension { expected: n, got: a.n_cols() });
    }
    if b.len() != n {
        return Err(Error::Dimension { expected: n, got: b.len() });
    }
    let bnorm = norm2(b);
    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(x0) => return Err(Error::Dimension { expected: n, got: x0.len() }),
        None => vec![0.0; n],
    };
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }

    let inv_diag: Vec<f64> = (0..n)
        .map(|i| {
            let d = a.get(i, i);
            if d > 0.0 { 1.0 / d } else { 1.0 }
        })
        .collect();

    let mut r: Vec<f64> = {
        let ax = a.spmv(&x)?;
        b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect()
    };
    let mut rel = norm2(&r) / bnorm;
    if rel <= tol {
        return Ok((x, 0));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 1..=max_iter {
        a.spmv_into(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotConverged { iterations: it, residual: rel });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        rel = norm2(&r) / bnorm;
        if rel <= tol {
            // confirm against the true residual to guard against drift
            let ax = a.spmv(&x)?;
            let true_rel = norm2(&b.iter().zip(&ax).map(|(bi, v)| bi - v).collect::<Vec<_>>()) / bnorm;
            if true_rel <= tol {
                return Ok((x, it));
            }
            r = b.iter().zip(&ax).map(|(bi, v)| bi - v).collect();
            rel = true_rel;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged { iterations: max_iter, residual: rel })
}
