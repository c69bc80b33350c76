//! Sparse LU factorization with threshold partial pivoting.
//!
//! Left-looking Gilbert-Peierls elimination on the compressed-column view of
//! the matrix. Columns are pre-ordered with approximate minimum degree on the
//! pattern of `A + A^T`; rows are chosen by threshold pivoting that prefers
//! the diagonal, which keeps the fill of the symmetric ordering for the
//! mostly diagonally dominant systems assembled here.

use std::sync::atomic::{AtomicUsize, Ordering};

use super::sparse::{norm2, SparseMatrix};
use crate::error::{Error, Result};

/// Pivots smaller than this multiple of `max |a_ij|` are treated as zero.
pub const SINGULAR_RELATIVE: f64 = 1e-14;

/// Arithmetic used for the factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FactorPrecision {
    #[default]
    Double,
    /// Matrix values are rounded to `f32` before factorizing. Accuracy is
    /// recovered with iterative refinement against the original matrix.
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorOptions {
    /// Relative threshold for accepting the diagonal entry as pivot.
    pub pivot_threshold: f64,
    pub precision: FactorPrecision,
}

impl Default for FactorOptions {
    fn default() -> Self {
        Self {
            pivot_threshold: 0.1,
            precision: FactorPrecision::Double,
        }
    }
}

/// Fill statistics of a factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FillStats {
    pub nnz_a: usize,
    pub nnz_l: usize,
    pub nnz_u: usize,
    /// Number of columns where an off-diagonal pivot was taken.
    pub off_diagonal_pivots: usize,
}

impl FillStats {
    pub fn fill_ratio(&self) -> f64 {
        (self.nnz_l + self.nnz_u) as f64 / self.nnz_a.max(1) as f64
    }
}

/// Outcome of a refined solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineStats {
    pub steps: usize,
    /// Final `||b - A x|| / ||b||`, evaluated with a compensated residual.
    pub relative_residual: f64,
}

/// Reusable LU factors `P A Q = L U`.
#[derive(Debug)]
pub struct Factorization {
    n: usize,
    matrix: SparseMatrix,
    // L: unit lower triangular, diagonal stored first in every column.
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    // U: upper triangular, diagonal stored last in every column.
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<f64>,
    pinv: Vec<usize>,
    q: Vec<usize>,
    stats: FillStats,
    solves: AtomicUsize,
}

impl Clone for Factorization {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            matrix: self.matrix.clone(),
            lp: self.lp.clone(),
            li: self.li.clone(),
            lx: self.lx.clone(),
            up: self.up.clone(),
            ui: self.ui.clone(),
            ux: self.ux.clone(),
            pinv: self.pinv.clone(),
            q: self.q.clone(),
            stats: self.stats,
            solves: AtomicUsize::new(self.solves.load(Ordering::Relaxed)),
        }
    }
}

/// Factorizes `a` with default options.
pub fn factorize(a: &SparseMatrix) -> Result<Factorization> {
    Factorization::new(a, FactorOptions::default())
}

/// Fill-reducing column order from AMD on the pattern of `A + A^T + I`.
fn fill_reducing_order(csc_ptr: &[usize], csc_idx: &[usize], n: usize) -> Vec<usize> {
    // Adding the diagonal keeps AMD's input valid for structurally
    // deficient matrices; AMD symmetrizes the pattern itself.
    let mut ap = Vec::with_capacity(n + 1);
    let mut ai = Vec::with_capacity(csc_idx.len() + n);
    ap.push(0usize);
    for j in 0..n {
        let col = &csc_idx[csc_ptr[j]..csc_ptr[j + 1]];
        let mut inserted = false;
        for &i in col {
            if !inserted && i >= j {
                if i != j {
                    ai.push(j);
                }
                inserted = true;
            }
            ai.push(i);
        }
        if !inserted {
            ai.push(j);
        }
        ap.push(ai.len());
    }
    match amd::order(n, &ap, &ai, &amd::Control::default()) {
        Ok((p, _, _)) if p.len() == n => p,
        _ => (0..n).collect(),
    }
}

/// Moves every deferred column of `q` behind all of its non-deferred
/// neighbours in the pattern of `A + A^T`, keeping the order otherwise.
fn defer_columns(q: &[usize], a: &SparseMatrix, csc: &SparseMatrix, deferred: &[bool]) -> Vec<usize> {
    let n = q.len();
    let mut pending = vec![0usize; n];
    let mut waiters: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut seen = vec![usize::MAX; n];
    for w in (0..n).filter(|&w| deferred[w]) {
        for &v in a.row(w).0.iter().chain(csc.row(w).0) {
            if v != w && !deferred[v] && seen[v] != w {
                seen[v] = w;
                pending[w] += 1;
                waiters[v].push(w);
            }
        }
    }
    let mut due = vec![false; n];
    let mut out = Vec::with_capacity(n);
    for &v in q {
        if deferred[v] {
            due[v] = true;
            if pending[v] == 0 {
                out.push(v);
            }
            continue;
        }
        out.push(v);
        for &w in &waiters[v] {
            pending[w] -= 1;
            if pending[w] == 0 && due[w] {
                out.push(w);
            }
        }
    }
    debug_assert_eq!(out.len(), n);
    out
}

impl Factorization {
    pub fn new(a: &SparseMatrix, options: FactorOptions) -> Result<Self> {
        Self::build(a, options, None)
    }

    /// Like [`Factorization::new`], but columns flagged in `deferred` are
    /// eliminated only after all their non-deferred neighbours. Meant for
    /// saddle-point rows with a tiny diagonal, which then pick up a usable
    /// pivot from the Schur complement instead of forcing row exchanges.
    pub fn with_deferred(a: &SparseMatrix, options: FactorOptions, deferred: &[bool]) -> Result<Self> {
        if deferred.len() != a.n_rows() {
            return Err(Error::Dimension {
                expected: a.n_rows(),
                got: deferred.len(),
            });
        }
        Self::build(a, options, Some(deferred))
    }

    fn build(a: &SparseMatrix, options: FactorOptions, deferred: Option<&[bool]>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension {
                expected: a.n_rows(),
                got: a.n_cols(),
            });
        }
        let n = a.n_rows();
        let working = match options.precision {
            FactorPrecision::Double => a.clone(),
            FactorPrecision::Single => a.rounded_to_single(),
        };
        // CSR of A^T is CSC of A.
        let csc = working.transpose();
        let (ap, ai, ax) = (csc.row_ptr(), csc.col_idx(), csc.values());
        let mut q = fill_reducing_order(ap, ai, n);
        if let Some(d) = deferred {
            q = defer_columns(&q, &working, &csc, d);
        }
        let threshold = SINGULAR_RELATIVE * working.max_abs();

        const NONE: usize = usize::MAX;
        let mut pinv = vec![NONE; n];
        let mut lp = Vec::with_capacity(n + 1);
        let mut up = Vec::with_capacity(n + 1);
        let mut li = Vec::with_capacity(4 * a.nnz() + n);
        let mut lx = Vec::with_capacity(4 * a.nnz() + n);
        let mut ui = Vec::with_capacity(4 * a.nnz() + n);
        let mut ux = Vec::with_capacity(4 * a.nnz() + n);
        let mut x = vec![0.0f64; n];
        let mut reach = Reach::new(n);
        let mut off_diagonal_pivots = 0;

        for k in 0..n {
            lp.push(li.len());
            up.push(ui.len());
            let col = q[k];

            // x = L \ A(:, col) restricted to the reachable set.
            let nodes = reach.compute(&lp, &li, &pinv, &ai[ap[col]..ap[col + 1]]);
            for &i in nodes {
                x[i] = 0.0;
            }
            for p in ap[col]..ap[col + 1] {
                x[ai[p]] = ax[p];
            }
            for &j in nodes {
                let jj = pinv[j];
                if jj == NONE {
                    continue;
                }
                // unit diagonal stored first
                let xj = x[j];
                for p in lp[jj] + 1..lp_end(&lp, &li, jj) {
                    x[li[p]] -= lx[p] * xj;
                }
            }

            let mut ipiv = NONE;
            let mut best = -1.0f64;
            for &i in nodes {
                if pinv[i] == NONE {
                    let t = x[i].abs();
                    if t > best {
                        best = t;
                        ipiv = i;
                    }
                } else {
                    ui.push(pinv[i]);
                    ux.push(x[i]);
                }
            }
            if ipiv == NONE || best <= threshold {
                return Err(Error::Singular {
                    row: col,
                    pivot: best.max(0.0),
                    threshold,
                });
            }
            if pinv[col] == NONE && x[col].abs() >= options.pivot_threshold * best {
                ipiv = col;
            } else if ipiv != col {
                off_diagonal_pivots += 1;
            }
            let pivot = x[ipiv];
            ui.push(k);
            ux.push(pivot);
            pinv[ipiv] = k;
            li.push(ipiv);
            lx.push(1.0);
            for &i in nodes {
                if pinv[i] == NONE {
                    li.push(i);
                    lx.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }
        }
        lp.push(li.len());
        up.push(ui.len());
        for i in li.iter_mut() {
            *i = pinv[*i];
        }

        let stats = FillStats {
            nnz_a: a.nnz(),
            nnz_l: li.len(),
            nnz_u: ui.len(),
            off_diagonal_pivots,
        };
        Ok(Self {
            n,
            matrix: a.clone(),
            lp,
            li,
            lx,
            up,
            ui,
            ux,
            pinv,
            q,
            stats,
            solves: AtomicUsize::new(0),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn stats(&self) -> FillStats {
        self.stats
    }

    /// The matrix that was factorized, in full precision.
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Number of solves performed with these factors.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    /// Solves `A x = b` with the stored factors.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: b.len(),
            });
        }
        self.solves.fetch_add(1, Ordering::Relaxed);
        Ok(self.apply_inverse(b))
    }

    fn apply_inverse(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.pinv[i]] = b[i];
        }
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for p in self.lp[j] + 1..self.lp[j + 1] {
                    x[self.li[p]] -= self.lx[p] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            let last = self.up[j + 1] - 1;
            x[j] /= self.ux[last];
            let xj = x[j];
            if xj != 0.0 {
                for p in self.up[j]..last {
                    x[self.ui[p]] -= self.ux[p] * xj;
                }
            }
        }
        let mut out = vec![0.0; n];
        for k in 0..n {
            out[self.q[k]] = x[k];
        }
        out
    }

    /// Solves with iterative refinement against the full-precision matrix.
    ///
    /// Stops once the compensated relative residual is at most `rtol` or after
    /// `max_steps` corrections. A correction that does not reduce the residual
    /// is discarded.
    pub fn solve_refined(&self, b: &[f64], max_steps: usize, rtol: f64) -> Result<(Vec<f64>, RefineStats)> {
        let mut x = self.solve(b)?;
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok((x, RefineStats { steps: 0, relative_residual: 0.0 }));
        }
        let mut r = self.matrix.residual_compensated(&x, b)?;
        let mut rel = norm2(&r) / bnorm;
        let mut steps = 0;
        while steps < max_steps && rel > rtol {
            let d = self.apply_inverse(&r);
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
            let r_trial = self.matrix.residual_compensated(&trial, b)?;
            let rel_trial = norm2(&r_trial) / bnorm;
            steps += 1;
            if !(rel_trial < rel) {
                break;
            }
            x = trial;
            r = r_trial;
            rel = rel_trial;
        }
        Ok((x, RefineStats { steps, relative_residual: rel }))
    }
}

fn lp_end(lp: &[usize], li: &[usize], j: usize) -> usize {
    if j + 1 < lp.len() {
        lp[j + 1]
    } else {
        li.len()
    }
}

/// Depth-first reach in the graph of the partial L factor.
struct Reach {
    mark: Vec<usize>,
    stamp: usize,
    stack: Vec<usize>,
    pstack: Vec<usize>,
    out: Vec<usize>,
}

impl Reach {
    fn new(n: usize) -> Self {
        Self {
            mark: vec![0; n],
            stamp: 0,
            stack: Vec::with_capacity(n),
            pstack: Vec::with_capacity(n),
            out: Vec::with_capacity(n),
        }
    }

    /// Nodes reachable from `start` in topological order.
    fn compute(&mut self, lp: &[usize], li: &[usize], pinv: &[usize], start: &[usize]) -> &[usize] {
        self.stamp += 1;
        self.out.clear();
        for &s in start {
            if self.mark[s] == self.stamp {
                continue;
            }
            self.stack.clear();
            self.pstack.clear();
            self.stack.push(s);
            self.pstack.push(usize::MAX);
            while let Some(&j) = self.stack.last() {
                let jj = pinv[j];
                let top = self.pstack.len() - 1;
                if self.mark[j] != self.stamp {
                    self.mark[j] = self.stamp;
                    self.pstack[top] = if jj == usize::MAX { 0 } else { lp[jj] + 1 };
                }
                let end = if jj == usize::MAX { 0 } else { lp_end(lp, li, jj) };
                let mut descended = false;
                let mut p = self.pstack[top];
                while p < end {
                    let i = li[p];
                    p += 1;
                    if self.mark[i] != self.stamp {
                        self.pstack[top] = p;
                        self.stack.push(i);
                        self.pstack.push(usize::MAX);
                        descended = true;
                        break;
                    }
                }
                if !descended {
                    self.stack.pop();
                    self.pstack.pop();
                    self.out.push(j);
                }
            }
        }
        // postorder reversed is a topological order
        self.out.reverse();
        &self.out
    }
}
