use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Real sparse matrix in compressed-row form.
///
/// Column indices are strictly increasing inside every row. Explicit zeros
/// are kept unless [`SparseMatrix::pruned`] is called.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed
    /// in the order they appear, so the result is bitwise reproducible.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::Structure(format!(
                    "triplet ({i}, {j}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
        }

        // Counting sort by row keeps the original order within a row.
        let mut counts = vec![0usize; n_rows + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut by_row = vec![(0usize, 0.0f64); triplets.len()];
        for &(i, j, v) in triplets {
            by_row[next[i]] = (j, v);
            next[i] += 1;
        }

        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for i in 0..n_rows {
            let row = &mut by_row[counts[i]..counts[i + 1]];
            // stable: equal columns keep insertion order for the summation
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == j {
                    sum += row[k].1;
                    k += 1;
                }
                col_idx.push(j);
                values.push(sum);
            }
            row_ptr.push(col_idx.len());
        }

        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
            symmetric: false,
        })
    }

    /// Builds directly from CSR arrays, validating the layout.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != n_rows + 1 || row_ptr[0] != 0 {
            return Err(Error::Structure("row pointer array has wrong length".into()));
        }
        if *row_ptr.last().unwrap() != col_idx.len() || col_idx.len() != values.len() {
            return Err(Error::Structure(
                "number of stored values differs from final row offset".into(),
            ));
        }
        for i in 0..n_rows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::Structure(format!("row pointer decreases at row {i}")));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Structure(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
            if cols.iter().any(|&j| j >= n_cols) {
                return Err(Error::Structure(format!("column index out of range in row {i}")));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
            symmetric: false,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
            symmetric: n_rows == n_cols,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
            symmetric: true,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Stored value at `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn symmetric_flag(&self) -> bool {
        self.symmetric
    }

    /// Sets the symmetric flag after checking `a_ij = a_ji` to 1e-12 relative.
    pub fn mark_symmetric(&mut self) -> Result<()> {
        let tol = 1e-12 * self.max_abs().max(f64::MIN_POSITIVE);
        if !self.is_square() || self.symmetry_defect() > tol {
            return Err(Error::Structure("matrix is not symmetric".into()));
        }
        self.symmetric = true;
        Ok(())
    }

    /// max |a_ij - a_ji| over the stored pattern of A and A^T.
    pub fn symmetry_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let t = self.transpose();
        let mut defect = 0.0f64;
        for i in 0..self.n_rows {
            let (ca, va) = self.row(i);
            let (cb, vb) = t.row(i);
            let (mut a, mut b) = (0, 0);
            while a < ca.len() || b < cb.len() {
                let d = if b >= cb.len() || (a < ca.len() && ca[a] < cb[b]) {
                    a += 1;
                    va[a - 1]
                } else if a >= ca.len() || cb[b] < ca[a] {
                    b += 1;
                    vb[b - 1]
                } else {
                    a += 1;
                    b += 1;
                    va[a - 1] - vb[b - 1]
                };
                defect = defect.max(d.abs());
            }
        }
        defect
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// y = A x with row-major, ascending-column summation.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n_cols {
            return Err(Error::Dimension {
                expected: self.n_cols,
                got: x.len(),
            });
        }
        if y.len() != self.n_rows {
            return Err(Error::Dimension {
                expected: self.n_rows,
                got: y.len(),
            });
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
        Ok(())
    }

    /// y += A^T x
    pub fn spmv_transpose_add(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n_rows {
            return Err(Error::Dimension {
                expected: self.n_rows,
                got: x.len(),
            });
        }
        if y.len() != self.n_cols {
            return Err(Error::Dimension {
                expected: self.n_cols,
                got: y.len(),
            });
        }
        for i in 0..self.n_rows {
            let xi = x[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.col_idx[k]] += self.values[k] * xi;
            }
        }
        Ok(())
    }

    /// x^T A y
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.n_rows {
            return Err(Error::Dimension {
                expected: self.n_rows,
                got: x.len(),
            });
        }
        let ay = self.spmv(y)?;
        Ok(x.iter().zip(&ay).map(|(a, b)| a * b).sum())
    }

    /// Residual `b - A x` with each row dot product accumulated in
    /// double-double precision, so the residual is accurate even when it is
    /// far below the rounding level of `A x`.
    pub fn residual_compensated(&self, x: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::Dimension {
                expected: self.n_cols,
                got: x.len(),
            });
        }
        if b.len() != self.n_rows {
            return Err(Error::Dimension {
                expected: self.n_rows,
                got: b.len(),
            });
        }
        let mut r = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            let (mut hi, mut lo) = (b[i], 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let p = -self.values[k] * x[self.col_idx[k]];
                let pe = (-self.values[k]).mul_add(x[self.col_idx[k]], -p);
                let (s, e) = two_sum(hi, p);
                hi = s;
                lo += e + pe;
            }
            r[i] = hi + lo;
        }
        Ok(r)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                col_idx[next[j]] = i;
                values[next[j]] = self.values[k];
                next[j] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr: counts,
            col_idx,
            values,
            symmetric: self.symmetric,
        }
    }

    pub fn scaled(&self, factor: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// `sum_k c_k A_k` over matrices of identical dimensions.
    pub fn linear_combination(terms: &[(f64, &SparseMatrix)]) -> Result<SparseMatrix> {
        let (n_rows, n_cols) = match terms.first() {
            Some((_, m)) => (m.n_rows, m.n_cols),
            None => return Err(Error::Argument("empty linear combination".into())),
        };
        let mut triplets = Vec::new();
        for (c, m) in terms {
            if m.n_rows != n_rows || m.n_cols != n_cols {
                return Err(Error::Dimension {
                    expected: n_rows,
                    got: m.n_rows,
                });
            }
            triplets.extend(m.triplets().map(|(i, j, v)| (i, j, c * v)));
        }
        let mut out = SparseMatrix::from_triplets(n_rows, n_cols, &triplets)?;
        out.symmetric = terms.iter().all(|(_, m)| m.symmetric);
        Ok(out)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    /// Drops stored entries with `|a_ij| <= tol`.
    pub fn pruned(&self, tol: f64) -> SparseMatrix {
        let kept: Vec<_> = self.triplets().filter(|&(_, _, v)| v.abs() > tol).collect();
        let mut out = SparseMatrix::from_triplets(self.n_rows, self.n_cols, &kept)
            .expect("indices come from a valid matrix");
        out.symmetric = self.symmetric;
        out
    }

    /// Copy with every value rounded through `f32`.
    pub fn rounded_to_single(&self) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = *v as f32 as f64);
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, j, v) in self.triplets() {
            d[i][j] += v;
        }
        d
    }

    /// Matrix Market coordinate export, 1-based indices.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::new();
        let _ = writeln!(s, "%%MatrixMarket matrix coordinate real general");
        let _ = writeln!(s, "{} {} {}", self.n_rows, self.n_cols, self.nnz());
        for (i, j, v) in self.triplets() {
            let _ = writeln!(s, "{} {} {:.17e}", i + 1, j + 1, v);
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_matrix_market<R: BufRead>(input: R) -> Result<SparseMatrix> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Structure("empty Matrix Market input".into()))??;
        let lower = header.to_ascii_lowercase();
        if !lower.starts_with("%%matrixmarket") || !lower.contains("coordinate") {
            return Err(Error::Structure("not a coordinate Matrix Market file".into()));
        }
        let symmetric = lower.contains("symmetric");
        let mut dims: Option<(usize, usize, usize)> = None;
        let mut triplets = Vec::new();
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('%') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse_usize = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Structure(format!("bad integer '{s}'")))
            };
            match dims {
                None => {
                    if fields.len() != 3 {
                        return Err(Error::Structure("bad size line".into()));
                    }
                    dims = Some((
                        parse_usize(fields[0])?,
                        parse_usize(fields[1])?,
                        parse_usize(fields[2])?,
                    ));
                }
                Some(_) => {
                    if fields.len() != 3 {
                        return Err(Error::Structure(format!("bad entry line '{line}'")));
                    }
                    let i = parse_usize(fields[0])?;
                    let j = parse_usize(fields[1])?;
                    let v: f64 = fields[2]
                        .parse()
                        .map_err(|_| Error::Structure(format!("bad value '{}'", fields[2])))?;
                    if i == 0 || j == 0 {
                        return Err(Error::Structure("Matrix Market indices are 1-based".into()));
                    }
                    triplets.push((i - 1, j - 1, v));
                    if symmetric && i != j {
                        triplets.push((j - 1, i - 1, v));
                    }
                }
            }
        }
        let (n_rows, n_cols, _) = dims.ok_or_else(|| Error::Structure("missing size line".into()))?;
        SparseMatrix::from_triplets(n_rows, n_cols, &triplets)
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mv(d: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        d.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    #[test]
    fn duplicates_are_summed() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), 3.0);
    }

    #[test]
    fn empty_triplets_give_zero_matrix() {
        let m = SparseMatrix::from_triplets(3, 3, &[]).unwrap();
        assert_eq!(m.nnz(), 0);
        assert_eq!(m.spmv(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn off_diagonal_pair_is_symmetric() {
        let mut m = SparseMatrix::from_triplets(2, 2, &[(1, 0, 4.0), (0, 1, 4.0)]).unwrap();
        m.mark_symmetric().unwrap();
        assert!(m.symmetric_flag());
        assert_eq!(m.spmv(&[1.0, 1.0]).unwrap(), vec![4.0, 4.0]);
    }

    #[test]
    fn asymmetric_matrix_rejects_flag() {
        let mut m = SparseMatrix::from_triplets(2, 2, &[(1, 0, 4.0), (0, 1, 3.0)]).unwrap();
        assert!(m.mark_symmetric().is_err());
    }

    #[test]
    fn out_of_range_triplet_is_structural_error() {
        let err = SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::Structure(_)));
    }

    #[test]
    fn zeros_are_retained_unless_pruned() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, -1.0), (1, 1, 2.0)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.pruned(0.0).nnz(), 1);
    }

    #[test]
    fn identity_and_zero_products() {
        let x = [1.0, -2.0, 3.5, 0.25, 7.0];
        assert_eq!(SparseMatrix::identity(5).spmv(&x).unwrap(), x.to_vec());
        assert_eq!(SparseMatrix::zeros(3, 3).spmv(&x[..3]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn spmv_dimension_mismatch() {
        let m = SparseMatrix::identity(3);
        assert!(matches!(m.spmv(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn random_spmv_matches_dense() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let t: Vec<_> = (0..30)
            .map(|_| (rng.gen_range(0..10), rng.gen_range(0..10), rng.gen_range(-1.0..1.0)))
            .collect();
        let m = SparseMatrix::from_triplets(10, 10, &t).unwrap();
        let x: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = m.spmv(&x).unwrap();
        let yd = dense_mv(&m.to_dense(), &x);
        let scale = yd.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in y.iter().zip(&yd) {
            assert!((a - b).abs() <= 1e-14 * scale.max(1.0));
        }
    }

    #[test]
    fn transpose_round_trip() {
        let m = SparseMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (1, 0, 2.0), (1, 2, 3.0)]).unwrap();
        let t = m.transpose();
        assert_eq!(t.n_rows(), 3);
        assert_eq!(t.get(2, 1), 3.0);
        assert_eq!(t.transpose(), m);
    }

    #[test]
    fn compensated_residual_resolves_cancellation() {
        let m = SparseMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap();
        let r = m.residual_compensated(&[1.0, 1e-17], &[1.0]).unwrap();
        assert!((r[0] + 1e-17).abs() < 1e-30);
    }

    #[test]
    fn matrix_market_round_trip() {
        let m = SparseMatrix::from_triplets(3, 2, &[(0, 1, 1.5), (2, 0, -2.25e-7)]).unwrap();
        let mut buf = Vec::new();
        m.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("1 2 "));
        let back = SparseMatrix::read_matrix_market(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn csr_validation_rejects_unsorted_columns() {
        let err = SparseMatrix::from_csr(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Structure(_)));
        let err = SparseMatrix::from_csr(1, 3, vec![0, 2], vec![1], vec![1.0]).unwrap_err();
        assert!(matches!(err, Error::Structure(_)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn matrix_and_vector() -> impl Strategy<Value = (SparseMatrix, Vec<f64>)> {
            (1usize..50, 1usize..50).prop_flat_map(|(r, c)| {
                (
                    prop::collection::vec((0..r, 0..c, -10.0f64..10.0), 0..200),
                    prop::collection::vec(-10.0f64..10.0, c),
                )
                    .prop_map(move |(t, x)| (SparseMatrix::from_triplets(r, c, &t).unwrap(), x))
            })
        }

        proptest! {
            #[test]
            fn spmv_agrees_with_dense_oracle((m, x) in matrix_and_vector()) {
                let y = m.spmv(&x).unwrap();
                let d = m.to_dense();
                for (i, row) in d.iter().enumerate() {
                    let exact: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
                    let mag: f64 = row.iter().zip(&x).map(|(a, b)| (a * b).abs()).sum();
                    prop_assert!((y[i] - exact).abs() <= 1e-14 * mag.max(1e-300));
                }
            }

            #[test]
            fn stored_values_match_row_offsets((m, _x) in matrix_and_vector()) {
                prop_assert_eq!(*m.row_ptr().last().unwrap(), m.nnz());
                for i in 0..m.n_rows() {
                    let (cols, _) = m.row(i);
                    prop_assert!(cols.windows(2).all(|w| w[0] < w[1]));
                }
            }
        }
    }
}
