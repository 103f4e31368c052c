//! Reverse-mode differentiation over dense matrices.
//!
//! Every operation appends a node to the [`Tape`]; node order is a
//! topological order, so [`Tape::backward`] is a single reverse sweep that
//! visits each node once. Leaf gradients persist across `backward` calls and
//! accumulate until [`Tape::zero_grad`].

use std::sync::Arc;

use super::activation::{sigmoid, Activation};
use super::matrix::dot;
use super::{Matrix, Segments, SparseMatrix, TensorError};

/// Lower/upper probability clamp used by the weighted cross-entropy.
pub const PROB_CLAMP: f64 = 1e-7;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// One supervised term of a weighted binary cross-entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BceTarget {
    pub row: usize,
    pub label: f64,
    pub weight: f64,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatMulNt(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Act(Var, Activation),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    WeightedSum { parts: Vec<Var>, weights: Var, per_row: bool },
    SoftmaxRows(Var),
    Spmm(Arc<SparseMatrix>, Var),
    GatherRows(Var, Arc<[usize]>),
    SegmentSoftmax(Var, Arc<Segments>),
    SegmentSum { weights: Var, values: Var, segments: Arc<Segments> },
    MeanRows(Var),
    SumAll(Var),
    WeightedBce(Var, Arc<[BceTarget]>),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::MatMulNt(..) => "matmul_nt",
            Op::Transpose(..) => "transpose",
            Op::Add(..) => "add",
            Op::AddRow(..) => "add_row",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::Act(..) => "activation",
            Op::ConcatCols(..) => "concat_cols",
            Op::SliceCols(..) => "slice_cols",
            Op::WeightedSum { .. } => "weighted_sum",
            Op::SoftmaxRows(..) => "softmax_rows",
            Op::Spmm(..) => "spmm",
            Op::GatherRows(..) => "gather_rows",
            Op::SegmentSoftmax(..) => "segment_softmax",
            Op::SegmentSum { .. } => "segment_sum",
            Op::MeanRows(..) => "mean_rows",
            Op::SumAll(..) => "sum",
            Op::WeightedBce(..) => "weighted_bce",
        }
    }

    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Leaf => vec![],
            Op::MatMul(a, b) | Op::MatMulNt(a, b) | Op::Add(a, b) | Op::AddRow(a, b) | Op::Mul(a, b) => {
                vec![*a, *b]
            }
            Op::Transpose(a)
            | Op::Scale(a, _)
            | Op::Act(a, _)
            | Op::SliceCols(a, _)
            | Op::SoftmaxRows(a)
            | Op::Spmm(_, a)
            | Op::GatherRows(a, _)
            | Op::SegmentSoftmax(a, _)
            | Op::MeanRows(a)
            | Op::SumAll(a)
            | Op::WeightedBce(a, _) => vec![*a],
            Op::ConcatCols(parts) => parts.clone(),
            Op::WeightedSum { parts, weights, .. } => {
                let mut v = parts.clone();
                v.push(*weights);
                v
            }
            Op::SegmentSum { weights, values, .. } => vec![*weights, *values],
        }
    }
}

struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

/// Recorded computation plus persistent leaf gradients.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Matrix>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trainable input.
    pub fn leaf(&mut self, value: Matrix) -> Result<Var, TensorError> {
        self.push(value, Op::Leaf, true)
    }

    /// Input that never receives a gradient.
    pub fn constant(&mut self, value: Matrix) -> Result<Var, TensorError> {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Accumulated gradient of a trainable leaf, if any backward pass reached it.
    pub fn grad(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn zero_grad(&mut self) {
        for g in &mut self.grads {
            *g = None;
        }
    }

    fn push(&mut self, value: Matrix, op: Op, leaf_grad: bool) -> Result<Var, TensorError> {
        if !value.is_finite() {
            return Err(TensorError::NonFinite { op: op.name() });
        }
        let requires_grad = match op {
            Op::Leaf => leaf_grad,
            ref other => other.inputs().iter().any(|v| self.nodes[v.0].requires_grad),
        };
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        self.grads.push(None);
        Ok(Var(self.nodes.len() - 1))
    }

    fn shape_err(what: &str, a: (usize, usize), b: (usize, usize)) -> TensorError {
        TensorError::Shape(format!("{what}: {}x{} vs {}x{}", a.0, a.1, b.0, b.1))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let value = self.value(a).matmul(self.value(b))?;
        self.push(value, Op::MatMul(a, b), false)
    }

    /// `a · bᵀ`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let value = self.value(a).matmul_nt(self.value(b))?;
        self.push(value, Op::MatMulNt(a, b), false)
    }

    /// `x · Wᵀ + b` with `W` of shape out×in and `b` a 1×out row broadcast over rows.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var, TensorError> {
        let xw = self.matmul_nt(x, w)?;
        self.add_row(xw, b)
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, TensorError> {
        let value = self.value(a).transpose();
        self.push(value, Op::Transpose(a), false)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(Self::shape_err("add", va.shape(), vb.shape()));
        }
        let mut value = va.clone();
        value.add_assign(vb);
        self.push(value, Op::Add(a, b), false)
    }

    /// Adds a 1×c row to every row of `x`.
    pub fn add_row(&mut self, x: Var, b: Var) -> Result<Var, TensorError> {
        let (vx, vb) = (self.value(x), self.value(b));
        if vb.rows() != 1 || vb.cols() != vx.cols() {
            return Err(Self::shape_err("add_row", vx.shape(), vb.shape()));
        }
        let mut value = vx.clone();
        for r in 0..value.rows() {
            for (o, v) in value.row_mut(r).iter_mut().zip(vb.as_slice()) {
                *o += v;
            }
        }
        self.push(value, Op::AddRow(x, b), false)
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(Self::shape_err("mul", va.shape(), vb.shape()));
        }
        let data = va.as_slice().iter().zip(vb.as_slice()).map(|(x, y)| x * y).collect();
        let value = Matrix::from_vec(va.rows(), va.cols(), data)?;
        self.push(value, Op::Mul(a, b), false)
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var, TensorError> {
        let value = self.value(a).scaled(factor);
        self.push(value, Op::Scale(a, factor), false)
    }

    pub fn activation(&mut self, x: Var, kind: Activation) -> Result<Var, TensorError> {
        let value = self.value(x).map(|v| kind.apply(v));
        self.push(value, Op::Act(x, kind), false)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var, TensorError> {
        self.activation(x, Activation::Tanh)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var, TensorError> {
        self.activation(x, Activation::Sigmoid)
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Result<Var, TensorError> {
        self.activation(x, Activation::LeakyRelu { slope })
    }

    /// Column-wise concatenation, parts in order.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = parts
            .first()
            .ok_or_else(|| TensorError::Shape("concat of zero parts".into()))?;
        let rows = self.value(*first).rows();
        let mut cols = 0;
        for p in parts {
            let v = self.value(*p);
            if v.rows() != rows {
                return Err(Self::shape_err("concat_cols", (rows, cols), v.shape()));
            }
            cols += v.cols();
        }
        let mut value = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let out = value.row_mut(r);
            let mut at = 0;
            for p in parts {
                let src = self.nodes[p.0].value.row(r);
                out[at..at + src.len()].copy_from_slice(src);
                at += src.len();
            }
        }
        self.push(value, Op::ConcatCols(parts.to_vec()), false)
    }

    /// Columns `start..start + len` of `x`.
    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var, TensorError> {
        let vx = self.value(x);
        if start + len > vx.cols() {
            return Err(TensorError::Shape(format!(
                "slice_cols {start}..{} of {} columns",
                start + len,
                vx.cols()
            )));
        }
        let mut value = Matrix::zeros(vx.rows(), len);
        for r in 0..vx.rows() {
            value.row_mut(r).copy_from_slice(&vx.row(r)[start..start + len]);
        }
        self.push(value, Op::SliceCols(x, start), false)
    }

    /// `Σ_p w_p · parts[p]`.
    ///
    /// `weights` is either 1×P (one weight per part) or rows×P (a separate
    /// convex combination for every row).
    pub fn weighted_sum(&mut self, parts: &[Var], weights: Var) -> Result<Var, TensorError> {
        let first = parts
            .first()
            .ok_or_else(|| TensorError::Shape("weighted_sum of zero parts".into()))?;
        let shape = self.value(*first).shape();
        for p in parts {
            if self.value(*p).shape() != shape {
                return Err(Self::shape_err("weighted_sum part", shape, self.value(*p).shape()));
            }
        }
        let w = self.value(weights);
        let per_row = match w.shape() {
            (1, c) if c == parts.len() => false,
            (r, c) if r == shape.0 && c == parts.len() => true,
            other => return Err(Self::shape_err("weighted_sum weights", (shape.0, parts.len()), other)),
        };
        let mut value = Matrix::zeros(shape.0, shape.1);
        for (k, p) in parts.iter().enumerate() {
            let src = &self.nodes[p.0].value;
            for r in 0..shape.0 {
                let wk = if per_row { w.get(r, k) } else { w.get(0, k) };
                for (o, v) in value.row_mut(r).iter_mut().zip(src.row(r)) {
                    *o += wk * v;
                }
            }
        }
        self.push(
            value,
            Op::WeightedSum {
                parts: parts.to_vec(),
                weights,
                per_row,
            },
            false,
        )
    }

    /// Softmax across the columns of each row, max-shifted.
    pub fn softmax_rows(&mut self, x: Var) -> Result<Var, TensorError> {
        let vx = self.value(x);
        let mut value = vx.clone();
        for r in 0..value.rows() {
            softmax_in_place(value.row_mut(r));
        }
        self.push(value, Op::SoftmaxRows(x), false)
    }

    /// Sparse (constant) times dense.
    pub fn spmm(&mut self, a: Arc<SparseMatrix>, x: Var) -> Result<Var, TensorError> {
        let value = a.matmul(self.value(x))?;
        self.push(value, Op::Spmm(a, x), false)
    }

    /// Row `e` of the output is row `index[e]` of `x`.
    pub fn gather_rows(&mut self, x: Var, index: Arc<[usize]>) -> Result<Var, TensorError> {
        let vx = self.value(x);
        if let Some(&bad) = index.iter().find(|&&i| i >= vx.rows()) {
            return Err(TensorError::Shape(format!(
                "gather row {bad} of {} rows",
                vx.rows()
            )));
        }
        let value = vx.select_rows(&index);
        self.push(value, Op::GatherRows(x, index), false)
    }

    /// Softmax of an E×1 score column within each segment.
    pub fn segment_softmax(&mut self, scores: Var, segments: Arc<Segments>) -> Result<Var, TensorError> {
        let vs = self.value(scores);
        if vs.cols() != 1 || vs.rows() != segments.total() {
            return Err(Self::shape_err("segment_softmax", vs.shape(), (segments.total(), 1)));
        }
        let mut value = vs.clone();
        for s in 0..segments.count() {
            softmax_in_place(&mut value.as_mut_slice()[segments.range(s)]);
        }
        self.push(value, Op::SegmentSoftmax(scores, segments), false)
    }

    /// `out[s] = Σ_{e ∈ s} weights[e] · values[e]`; one output row per segment.
    pub fn segment_sum(
        &mut self,
        weights: Var,
        values: Var,
        segments: Arc<Segments>,
    ) -> Result<Var, TensorError> {
        let (vw, vv) = (self.value(weights), self.value(values));
        if vw.cols() != 1 || vw.rows() != segments.total() || vv.rows() != segments.total() {
            return Err(Self::shape_err("segment_sum", vw.shape(), vv.shape()));
        }
        let mut value = Matrix::zeros(segments.count(), vv.cols());
        for s in 0..segments.count() {
            let out = value.row_mut(s);
            for e in segments.range(s) {
                let w = vw.get(e, 0);
                for (o, v) in out.iter_mut().zip(vv.row(e)) {
                    *o += w * v;
                }
            }
        }
        self.push(
            value,
            Op::SegmentSum {
                weights,
                values,
                segments,
            },
            false,
        )
    }

    /// Column means as a 1×c row.
    pub fn mean_rows(&mut self, x: Var) -> Result<Var, TensorError> {
        let vx = self.value(x);
        if vx.rows() == 0 {
            return Err(TensorError::Shape("mean over zero rows".into()));
        }
        let mut value = Matrix::zeros(1, vx.cols());
        for r in 0..vx.rows() {
            for (o, v) in value.row_mut(0).iter_mut().zip(vx.row(r)) {
                *o += v;
            }
        }
        let value = value.scaled(1.0 / vx.rows() as f64);
        self.push(value, Op::MeanRows(x), false)
    }

    pub fn sum(&mut self, x: Var) -> Result<Var, TensorError> {
        let value = Matrix::scalar(self.value(x).sum());
        self.push(value, Op::SumAll(x), false)
    }

    /// `Σ_t w_t · BCE(sigmoid(logit[row_t]), y_t)` with probabilities clamped
    /// to `[PROB_CLAMP, 1 − PROB_CLAMP]`.
    pub fn weighted_bce(&mut self, logits: Var, targets: Arc<[BceTarget]>) -> Result<Var, TensorError> {
        let vl = self.value(logits);
        if vl.cols() != 1 {
            return Err(Self::shape_err("weighted_bce logits", vl.shape(), (vl.rows(), 1)));
        }
        let mut total = 0.0;
        for t in targets.iter() {
            if t.row >= vl.rows() {
                return Err(TensorError::Shape(format!("bce target row {} out of range", t.row)));
            }
            let p = sigmoid(vl.get(t.row, 0)).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            total -= t.weight * (t.label * p.ln() + (1.0 - t.label) * (1.0 - p).ln());
        }
        self.push(Matrix::scalar(total), Op::WeightedBce(logits, targets), false)
    }

    /// Accumulates `d loss / d leaf` into every trainable leaf.
    pub fn backward(&mut self, loss: Var) -> Result<(), TensorError> {
        let shape = self.value(loss).shape();
        if shape != (1, 1) {
            return Err(TensorError::NotScalar(shape.0, shape.1));
        }
        if !self.nodes[loss.0].requires_grad {
            return Ok(());
        }
        let mut local: Vec<Option<Matrix>> = vec![None; loss.0 + 1];
        local[loss.0] = Some(Matrix::scalar(1.0));
        for idx in (0..=loss.0).rev() {
            let Some(g) = local[idx].take() else { continue };
            if let Op::Leaf = self.nodes[idx].op {
                if self.nodes[idx].requires_grad {
                    match &mut self.grads[idx] {
                        Some(acc) => acc.add_assign(&g),
                        slot @ None => *slot = Some(g),
                    }
                }
                continue;
            }
            for (input, grad) in self.input_grads(idx, &g)? {
                if !self.nodes[input.0].requires_grad {
                    continue;
                }
                match &mut local[input.0] {
                    Some(acc) => acc.add_assign(&grad),
                    slot @ None => *slot = Some(grad),
                }
            }
        }
        Ok(())
    }

    fn input_grads(&self, idx: usize, g: &Matrix) -> Result<Vec<(Var, Matrix)>, TensorError> {
        let node = &self.nodes[idx];
        let val = |v: Var| &self.nodes[v.0].value;
        let needs = |v: Var| self.nodes[v.0].requires_grad;
        let mut out = Vec::new();
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if needs(*a) {
                    out.push((*a, g.matmul_nt(val(*b))?));
                }
                if needs(*b) {
                    out.push((*b, val(*a).matmul_tn(g)?));
                }
            }
            Op::MatMulNt(a, b) => {
                if needs(*a) {
                    out.push((*a, g.matmul(val(*b))?));
                }
                if needs(*b) {
                    out.push((*b, g.matmul_tn(val(*a))?));
                }
            }
            Op::Transpose(a) => out.push((*a, g.transpose())),
            Op::Add(a, b) => {
                out.push((*a, g.clone()));
                out.push((*b, g.clone()));
            }
            Op::AddRow(x, b) => {
                out.push((*x, g.clone()));
                if needs(*b) {
                    let mut gb = Matrix::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (o, v) in gb.row_mut(0).iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                    out.push((*b, gb));
                }
            }
            Op::Mul(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                let prod = |m: &Matrix| {
                    let data = g.as_slice().iter().zip(m.as_slice()).map(|(x, y)| x * y).collect();
                    Matrix::from_vec(g.rows(), g.cols(), data)
                };
                if needs(*a) {
                    out.push((*a, prod(vb)?));
                }
                if needs(*b) {
                    out.push((*b, prod(va)?));
                }
            }
            Op::Scale(a, f) => out.push((*a, g.scaled(*f))),
            Op::Act(x, kind) => {
                let (vx, vy) = (val(*x), &node.value);
                let data = g
                    .as_slice()
                    .iter()
                    .zip(vx.as_slice().iter().zip(vy.as_slice()))
                    .map(|(gv, (&xv, &yv))| gv * kind.derivative(xv, yv))
                    .collect();
                out.push((*x, Matrix::from_vec(g.rows(), g.cols(), data)?));
            }
            Op::ConcatCols(parts) => {
                let mut at = 0;
                for p in parts {
                    let cols = val(*p).cols();
                    if needs(*p) {
                        let mut gp = Matrix::zeros(g.rows(), cols);
                        for r in 0..g.rows() {
                            gp.row_mut(r).copy_from_slice(&g.row(r)[at..at + cols]);
                        }
                        out.push((*p, gp));
                    }
                    at += cols;
                }
            }
            Op::SliceCols(x, start) => {
                let vx = val(*x);
                let mut gx = Matrix::zeros(vx.rows(), vx.cols());
                for r in 0..g.rows() {
                    gx.row_mut(r)[*start..*start + g.cols()].copy_from_slice(g.row(r));
                }
                out.push((*x, gx));
            }
            Op::WeightedSum {
                parts,
                weights,
                per_row,
            } => {
                let w = val(*weights);
                let per_row = *per_row;
                let mut gw = Matrix::zeros(w.rows(), w.cols());
                for (k, p) in parts.iter().enumerate() {
                    let vp = val(*p);
                    if needs(*p) {
                        let mut gp = Matrix::zeros(g.rows(), g.cols());
                        for r in 0..g.rows() {
                            let wk = if per_row { w.get(r, k) } else { w.get(0, k) };
                            for (o, v) in gp.row_mut(r).iter_mut().zip(g.row(r)) {
                                *o = wk * v;
                            }
                        }
                        out.push((*p, gp));
                    }
                    if needs(*weights) {
                        if per_row {
                            for r in 0..g.rows() {
                                gw.set(r, k, dot(g.row(r), vp.row(r)));
                            }
                        } else {
                            gw.set(0, k, g.inner(vp));
                        }
                    }
                }
                if needs(*weights) {
                    out.push((*weights, gw));
                }
            }
            Op::SoftmaxRows(x) => {
                let y = &node.value;
                let mut gx = Matrix::zeros(y.rows(), y.cols());
                for r in 0..y.rows() {
                    softmax_backward(y.row(r), g.row(r), gx.row_mut(r));
                }
                out.push((*x, gx));
            }
            Op::Spmm(a, x) => out.push((*x, a.matmul_t(g))),
            Op::GatherRows(x, index) => {
                let vx = val(*x);
                let mut gx = Matrix::zeros(vx.rows(), vx.cols());
                for (e, &src) in index.iter().enumerate() {
                    for (o, v) in gx.row_mut(src).iter_mut().zip(g.row(e)) {
                        *o += v;
                    }
                }
                out.push((*x, gx));
            }
            Op::SegmentSoftmax(x, segments) => {
                let y = node.value.as_slice();
                let mut gx = Matrix::zeros(node.value.rows(), 1);
                for s in 0..segments.count() {
                    let range = segments.range(s);
                    softmax_backward(
                        &y[range.clone()],
                        &g.as_slice()[range.clone()],
                        &mut gx.as_mut_slice()[range],
                    );
                }
                out.push((*x, gx));
            }
            Op::SegmentSum {
                weights,
                values,
                segments,
            } => {
                let (vw, vv) = (val(*weights), val(*values));
                let mut gw = Matrix::zeros(vw.rows(), 1);
                let mut gv = Matrix::zeros(vv.rows(), vv.cols());
                for s in 0..segments.count() {
                    let gs = g.row(s);
                    for e in segments.range(s) {
                        gw.set(e, 0, dot(gs, vv.row(e)));
                        let w = vw.get(e, 0);
                        for (o, v) in gv.row_mut(e).iter_mut().zip(gs) {
                            *o = w * v;
                        }
                    }
                }
                if needs(*weights) {
                    out.push((*weights, gw));
                }
                if needs(*values) {
                    out.push((*values, gv));
                }
            }
            Op::MeanRows(x) => {
                let vx = val(*x);
                let scale = 1.0 / vx.rows() as f64;
                let mut gx = Matrix::zeros(vx.rows(), vx.cols());
                for r in 0..vx.rows() {
                    for (o, v) in gx.row_mut(r).iter_mut().zip(g.row(0)) {
                        *o = v * scale;
                    }
                }
                out.push((*x, gx));
            }
            Op::SumAll(x) => {
                let vx = val(*x);
                out.push((*x, Matrix::filled(vx.rows(), vx.cols(), g.item())));
            }
            Op::WeightedBce(logits, targets) => {
                let vl = val(*logits);
                let mut gl = Matrix::zeros(vl.rows(), 1);
                let upstream = g.item();
                for t in targets.iter() {
                    let raw = sigmoid(vl.get(t.row, 0));
                    if (PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&raw) {
                        let cur = gl.get(t.row, 0);
                        gl.set(t.row, 0, cur + upstream * t.weight * (raw - t.label));
                    }
                }
                out.push((*logits, gl));
            }
        }
        Ok(out)
    }
}

/// Max-shifted softmax over a slice.
pub(crate) fn softmax_in_place(xs: &mut [f64]) {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    for x in xs.iter_mut() {
        *x /= total;
    }
}

fn softmax_backward(y: &[f64], g: &[f64], out: &mut [f64]) {
    let inner = dot(y, g);
    for ((o, &yv), &gv) in out.iter_mut().zip(y).zip(g) {
        *o = yv * (gv - inner);
    }
}
