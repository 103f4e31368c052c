use super::{Matrix, TensorError};

/// Binary sparse matrix in compressed-row form. Stored values are implicitly 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
}

impl SparseMatrix {
    /// Builds from per-row column lists. Each row must be sorted and duplicate free.
    pub fn from_rows(cols: usize, rows: &[Vec<usize>]) -> Result<Self, TensorError> {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        offsets.push(0);
        for (r, row) in rows.iter().enumerate() {
            for (k, &c) in row.iter().enumerate() {
                if c >= cols {
                    return Err(TensorError::Shape(format!(
                        "sparse row {r} references column {c} >= {cols}"
                    )));
                }
                if k > 0 && row[k - 1] >= c {
                    return Err(TensorError::Shape(format!(
                        "sparse row {r} is not strictly ascending"
                    )));
                }
            }
            indices.extend_from_slice(row);
            offsets.push(indices.len());
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            offsets,
            indices,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Column indices of the stored entries in row `r`, ascending.
    pub fn row(&self, r: usize) -> &[usize] {
        &self.indices[self.offsets[r]..self.offsets[r + 1]]
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        self.row(r).binary_search(&c).is_ok()
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for &c in self.row(r) {
                m.set(r, c, 1.0);
            }
        }
        m
    }

    /// `self · x`.
    pub fn matmul(&self, x: &Matrix) -> Result<Matrix, TensorError> {
        if x.rows() != self.cols {
            return Err(TensorError::Shape(format!(
                "sparse {}x{} by dense {}x{}",
                self.rows,
                self.cols,
                x.rows(),
                x.cols()
            )));
        }
        let mut out = Matrix::zeros(self.rows, x.cols());
        for r in 0..self.rows {
            let out_row = out.row_mut(r);
            for &c in &self.indices[self.offsets[r]..self.offsets[r + 1]] {
                for (o, v) in out_row.iter_mut().zip(x.row(c)) {
                    *o += v;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · g`, accumulated in row order.
    pub fn matmul_t(&self, g: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.cols, g.cols());
        for r in 0..self.rows {
            let g_row = g.row(r);
            for &c in self.row(r) {
                for (o, v) in out.row_mut(c).iter_mut().zip(g_row) {
                    *o += v;
                }
            }
        }
        out
    }
}

/// Contiguous segments over a flat edge array: segment `s` covers
/// positions `offsets[s]..offsets[s + 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segments {
    offsets: Vec<usize>,
}

impl Segments {
    pub fn from_offsets(offsets: Vec<usize>) -> Result<Self, TensorError> {
        if offsets.first() != Some(&0) || offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(TensorError::Shape(
                "segment offsets must start at 0 and be non-decreasing".into(),
            ));
        }
        Ok(Self { offsets })
    }

    pub fn count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn total(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    #[inline]
    pub fn range(&self, s: usize) -> std::ops::Range<usize> {
        self.offsets[s]..self.offsets[s + 1]
    }
}
