//! Node-input matrices that may be kept in factored form.
//!
//! The local embedding `h_i = Σ_r β_r a_i^r` is an N-wide row per node. It is
//! only ever consumed through linear maps, so it stays factored as
//! `(β, {A^r})` and `h Wᵀ` is evaluated as `Σ_r β_r (A^r Wᵀ)`.

use std::sync::Arc;

use crate::tensor::{SparseMatrix, Tape, TensorError, Var};

/// `h = Σ_r β_r A^r` kept as its factors.
#[derive(Debug, Clone)]
pub struct LocalEmbedding {
    pub beta: Var,
    pub relations: Vec<Arc<SparseMatrix>>,
}

impl LocalEmbedding {
    pub fn width(&self) -> usize {
        self.relations.first().map_or(0, |a| a.cols())
    }

    pub fn rows(&self) -> usize {
        self.relations.first().map_or(0, |a| a.rows())
    }

    /// `h · Wᵀ` for `W` of shape out×N.
    pub fn project(&self, tape: &mut Tape, w: Var) -> Result<Var, TensorError> {
        let wt = tape.transpose(w)?;
        let parts = self
            .relations
            .iter()
            .map(|a| tape.spmm(a.clone(), wt))
            .collect::<Result<Vec<_>, _>>()?;
        tape.weighted_sum(&parts, self.beta)
    }

    /// Dense N×N `h`.
    pub fn dense(&self, tape: &mut Tape) -> Result<Var, TensorError> {
        let parts = self
            .relations
            .iter()
            .map(|a| tape.constant(a.to_dense()))
            .collect::<Result<Vec<_>, _>>()?;
        tape.weighted_sum(&parts, self.beta)
    }
}

#[derive(Debug, Clone)]
pub enum InputBlock {
    Local(LocalEmbedding),
    Dense(Var),
}

/// Column-wise concatenation of input blocks, `[b_1 ‖ b_2 ‖ …]`.
#[derive(Debug, Clone)]
pub struct NodeInput {
    blocks: Vec<InputBlock>,
}

impl NodeInput {
    pub fn local(local: LocalEmbedding) -> Self {
        Self {
            blocks: vec![InputBlock::Local(local)],
        }
    }

    pub fn dense(v: Var) -> Self {
        Self {
            blocks: vec![InputBlock::Dense(v)],
        }
    }

    pub fn concat(mut self, other: NodeInput) -> Self {
        self.blocks.extend(other.blocks);
        self
    }

    pub fn blocks(&self) -> &[InputBlock] {
        &self.blocks
    }

    fn block_width(tape: &Tape, block: &InputBlock) -> usize {
        match block {
            InputBlock::Local(l) => l.width(),
            InputBlock::Dense(v) => tape.value(*v).cols(),
        }
    }

    pub fn width(&self, tape: &Tape) -> usize {
        self.blocks.iter().map(|b| Self::block_width(tape, b)).sum()
    }

    /// `x · Wᵀ` for `W` of shape out×width.
    pub fn project(&self, tape: &mut Tape, w: Var) -> Result<Var, TensorError> {
        let total = self.width(tape);
        let w_cols = tape.value(w).cols();
        if w_cols != total {
            return Err(TensorError::Shape(format!(
                "projection with {w_cols} input columns applied to {total}-wide input"
            )));
        }
        let mut acc: Option<Var> = None;
        let mut start = 0;
        for block in &self.blocks {
            let width = Self::block_width(tape, block);
            let wb = if self.blocks.len() == 1 {
                w
            } else {
                tape.slice_cols(w, start, width)?
            };
            let part = match block {
                InputBlock::Local(l) => l.project(tape, wb)?,
                InputBlock::Dense(v) => tape.matmul_nt(*v, wb)?,
            };
            acc = Some(match acc {
                None => part,
                Some(prev) => tape.add(prev, part)?,
            });
            start += width;
        }
        acc.ok_or_else(|| TensorError::Shape("projection of an empty input".into()))
    }

    /// `x · Wᵀ + b`.
    pub fn linear(&self, tape: &mut Tape, w: Var, b: Var) -> Result<Var, TensorError> {
        let xw = self.project(tape, w)?;
        tape.add_row(xw, b)
    }

    /// Materialized dense input.
    pub fn materialize(&self, tape: &mut Tape) -> Result<Var, TensorError> {
        let parts = self
            .blocks
            .iter()
            .map(|b| match b {
                InputBlock::Local(l) => l.dense(tape),
                InputBlock::Dense(v) => Ok(*v),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if parts.len() == 1 {
            Ok(parts[0])
        } else {
            tape.concat_cols(&parts)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Matrix;

    #[test]
    fn factored_projection_matches_dense() {
        let a = Arc::new(SparseMatrix::from_rows(3, &[vec![1], vec![0, 2], vec![1]]).unwrap());
        let b = Arc::new(SparseMatrix::from_rows(3, &[vec![2], vec![], vec![0]]).unwrap());
        let mut tape = Tape::new();
        let beta = tape.constant(Matrix::row_vector(&[0.25, 0.75])).unwrap();
        let f = tape
            .constant(Matrix::from_vec(3, 2, vec![1.0, -1.0, 0.5, 2.0, 0.0, 3.0]).unwrap())
            .unwrap();
        let input = NodeInput::local(LocalEmbedding {
            beta,
            relations: vec![a, b],
        })
        .concat(NodeInput::dense(f));
        assert_eq!(input.width(&tape), 5);
        let w = tape
            .constant(Matrix::from_vec(2, 5, (0..10).map(|v| v as f64 * 0.1 - 0.3).collect()).unwrap())
            .unwrap();
        let factored = input.project(&mut tape, w).unwrap();
        let dense = input.materialize(&mut tape).unwrap();
        let direct = tape.matmul_nt(dense, w).unwrap();
        for (x, y) in tape.value(factored).as_slice().iter().zip(tape.value(direct).as_slice()) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
