//! Dense 64-bit matrices, a reverse-mode tape over them, Adam, and parameter storage.

mod activation;
mod adam;
pub mod gradcheck;
mod matrix;
mod params;
mod sparse;
mod tape;

pub use activation::{sigmoid, Activation};
pub use adam::{Adam, AdamState};
pub use matrix::Matrix;
pub use params::{xavier_uniform, Binding, ParamId, ParamStore};
pub use sparse::{Segments, SparseMatrix};
pub use tape::{BceTarget, Tape, Var, PROB_CLAMP};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },
    #[error("backward requires a scalar loss, got {0}x{1}")]
    NotScalar(usize, usize),
    #[error("masked softmax over an empty mask")]
    EmptyMask,
}

/// Softmax restricted to `mask`; entries outside the mask are exactly zero.
pub fn masked_softmax(scores: &[f64], mask: &[usize]) -> Result<Vec<f64>, TensorError> {
    if mask.is_empty() {
        return Err(TensorError::EmptyMask);
    }
    if let Some(&bad) = mask.iter().find(|&&m| m >= scores.len()) {
        return Err(TensorError::Shape(format!(
            "mask index {bad} outside {} scores",
            scores.len()
        )));
    }
    let mut picked: Vec<f64> = mask.iter().map(|&m| scores[m]).collect();
    tape::softmax_in_place(&mut picked);
    let mut out = vec![0.0; scores.len()];
    for (&m, p) in mask.iter().zip(picked) {
        out[m] = p;
    }
    Ok(out)
}

/// Plain softmax of a vector.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let mut out = scores.to_vec();
    tape::softmax_in_place(&mut out);
    out
}
