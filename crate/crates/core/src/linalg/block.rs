use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

/// A placed block of a multi-field operator.
#[derive(Debug, Clone)]
pub struct Block {
    pub row_field: usize,
    pub col_field: usize,
    pub matrix: SparseMatrix,
}

/// Multi-field linear system: named fields, the blocks coupling them and the
/// monolithic matrix obtained by placing every block at its field offsets.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    names: Vec<String>,
    offsets: Vec<usize>,
    blocks: Vec<Block>,
    matrix: SparseMatrix,
}

impl BlockSystem {
    /// `fields` lists `(name, dof count)` in unknown order; `blocks` are
    /// `(row field, column field, matrix)`. Blocks landing on the same
    /// position are summed.
    pub fn new(fields: &[(&str, usize)], blocks: Vec<(usize, usize, SparseMatrix)>) -> Result<Self> {
        let mut offsets = vec![0usize];
        for (_, n) in fields {
            offsets.push(offsets.last().unwrap() + n);
        }
        let total = *offsets.last().unwrap();
        let mut triplets = Vec::new();
        let mut placed = Vec::with_capacity(blocks.len());
        for (r, c, m) in blocks {
            if r >= fields.len() || c >= fields.len() {
                return Err(Error::Structure(format!("block ({r}, {c}) refers to an unknown field")));
            }
            if m.n_rows() != fields[r].1 {
                return Err(Error::Dimension { expected: fields[r].1, got: m.n_rows() });
            }
            if m.n_cols() != fields[c].1 {
                return Err(Error::Dimension { expected: fields[c].1, got: m.n_cols() });
            }
            triplets.extend(m.triplets().map(|(i, j, v)| (i + offsets[r], j + offsets[c], v)));
            placed.push(Block { row_field: r, col_field: c, matrix: m });
        }
        let mut matrix = SparseMatrix::from_triplets(total, total, &triplets)?;
        // flag is informative only; a failed check just leaves it unset
        let _ = matrix.mark_symmetric();
        Ok(Self {
            names: fields.iter().map(|(s, _)| s.to_string()).collect(),
            offsets,
            blocks: placed,
            matrix,
        })
    }

    /// Wraps an already assembled matrix, keeping the field layout.
    pub fn with_matrix(&self, matrix: SparseMatrix) -> Result<Self> {
        if matrix.n_rows() != self.dim() || matrix.n_cols() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: matrix.n_rows() });
        }
        Ok(Self { matrix, ..self.clone() })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn field_names(&self) -> &[String] {
        &self.names
    }

    /// Start of every field, followed by the total dimension.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn field_range(&self, field: usize) -> std::ops::Range<usize> {
        self.offsets[field]..self.offsets[field + 1]
    }

    /// Name of the field owning a monolithic dof.
    pub fn field_of(&self, dof: usize) -> Option<&str> {
        (0..self.names.len())
            .find(|&f| self.field_range(f).contains(&dof))
            .map(|f| self.names[f].as_str())
    }

    /// Concatenates per-field vectors into one monolithic vector.
    pub fn join(&self, parts: &[&[f64]]) -> Result<Vec<f64>> {
        if parts.len() != self.names.len() {
            return Err(Error::Dimension { expected: self.names.len(), got: parts.len() });
        }
        let mut out = Vec::with_capacity(self.dim());
        for (f, p) in parts.iter().enumerate() {
            let want = self.offsets[f + 1] - self.offsets[f];
            if p.len() != want {
                return Err(Error::Dimension { expected: want, got: p.len() });
            }
            out.extend_from_slice(p);
        }
        Ok(out)
    }

    /// Splits a monolithic vector into per-field slices.
    pub fn split<'a>(&self, v: &'a [f64]) -> Vec<&'a [f64]> {
        (0..self.names.len()).map(|f| &v[self.field_range(f)]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placement_follows_offsets() {
        let a = SparseMatrix::identity(2);
        let b = SparseMatrix::from_triplets(1, 2, &[(0, 1, 5.0)]).unwrap();
        let sys = BlockSystem::new(&[("u", 2), ("p", 1)], vec![(0, 0, a), (1, 0, b)]).unwrap();
        assert_eq!(sys.dim(), 3);
        assert_eq!(sys.offsets(), &[0, 2, 3]);
        assert_eq!(sys.matrix().get(2, 1), 5.0);
        assert_eq!(sys.matrix().get(1, 1), 1.0);
        assert_eq!(sys.field_of(2), Some("p"));
    }

    #[test]
    fn mismatched_block_rejected() {
        let a = SparseMatrix::identity(3);
        assert!(BlockSystem::new(&[("u", 2)], vec![(0, 0, a)]).is_err());
    }

    #[test]
    fn join_and_split_round_trip() {
        let sys = BlockSystem::new(&[("a", 2), ("b", 3)], vec![]).unwrap();
        let v = sys.join(&[&[1.0, 2.0], &[3.0, 4.0, 5.0]]).unwrap();
        let parts = sys.split(&v);
        assert_eq!(parts[1], &[3.0, 4.0, 5.0]);
    }
}
