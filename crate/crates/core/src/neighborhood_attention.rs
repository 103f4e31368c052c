//! Multi-head self-attention over union neighborhoods.
//!
//! Layer `l`, head `k` projects its input with `P^(l,k)` (`ĝ = P g`), scores
//! each neighbor pair with `σ(aᵀ [ĝ_i ‖ ĝ_j])`, normalizes the scores over
//! `𝒩_i` and aggregates `σ(Σ_j α_ij ĝ_j)`. Head outputs are concatenated.
//! In `faithful_dims` mode there is no projection and the width of layer `l`
//! is `K^l · d_in`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Neighborhoods;
use crate::input::NodeInput;
use crate::tensor::{
    masked_softmax, xavier_uniform, Activation, Binding, Matrix, ParamId, ParamStore, Tape, TensorError, Var,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodConfig {
    pub layers: usize,
    pub heads: usize,
    pub head_dim: usize,
    pub score_activation: Activation,
    pub aggregation_activation: Activation,
    pub faithful_dims: bool,
}

impl Default for NeighborhoodConfig {
    fn default() -> Self {
        Self {
            layers: 2,
            heads: 8,
            head_dim: 4,
            score_activation: Activation::leaky_relu(),
            aggregation_activation: Activation::leaky_relu(),
            faithful_dims: false,
        }
    }
}

impl NeighborhoodConfig {
    /// No head projections, tanh aggregation.
    pub fn faithful(layers: usize, heads: usize) -> Self {
        Self {
            layers,
            heads,
            head_dim: 0,
            score_activation: Activation::leaky_relu(),
            aggregation_activation: Activation::Tanh,
            faithful_dims: true,
        }
    }

    pub fn validate(&self) -> Result<(), TensorError> {
        if self.layers == 0 || self.heads == 0 {
            return Err(TensorError::Shape(format!(
                "neighborhood attention needs at least one layer and head, got L={} K={}",
                self.layers, self.heads
            )));
        }
        if !self.faithful_dims && self.head_dim == 0 {
            return Err(TensorError::Shape("head_dim must be at least 1".into()));
        }
        Ok(())
    }

    /// Input width of layer `l` (0-based) given the width of `g^(0)`.
    pub fn layer_input_dim(&self, input_dim: usize, l: usize) -> usize {
        if l == 0 {
            input_dim
        } else if self.faithful_dims {
            input_dim * self.heads.pow(l as u32)
        } else {
            self.heads * self.head_dim
        }
    }

    pub fn head_width(&self, input_dim: usize, l: usize) -> usize {
        if self.faithful_dims {
            self.layer_input_dim(input_dim, l)
        } else {
            self.head_dim
        }
    }

    pub fn output_dim(&self, input_dim: usize) -> usize {
        self.heads * self.head_width(input_dim, self.layers - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttentionHead {
    /// `P`, head_dim×d_in; absent in faithful mode.
    pub projection: Option<ParamId>,
    /// `a`, 1×2·head_dim.
    pub attention: ParamId,
}

#[derive(Debug, Clone)]
pub struct NeighborhoodAttention {
    pub config: NeighborhoodConfig,
    pub input_dim: usize,
    /// `heads[l][k]`.
    pub heads: Vec<Vec<AttentionHead>>,
}

/// Result of one layer: the concatenated output and the α column per head.
#[derive(Debug, Clone)]
pub struct LayerOutput {
    pub output: Var,
    pub alphas: Vec<Var>,
}

#[derive(Debug, Clone)]
pub struct NeighborhoodOutput {
    pub output: Var,
    /// `alphas[l][k]`, E×1 in `Neighborhoods` layout.
    pub alphas: Vec<Vec<Var>>,
}

impl NeighborhoodAttention {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        config: NeighborhoodConfig,
        input_dim: usize,
        rng: &mut R,
    ) -> Result<Self, TensorError> {
        config.validate()?;
        let mut heads = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let d_in = config.layer_input_dim(input_dim, l);
            let width = config.head_width(input_dim, l);
            let layer = (0..config.heads)
                .map(|k| {
                    let projection = (!config.faithful_dims).then(|| {
                        store.register(format!("neighbor.l{l}.h{k}.proj"), xavier_uniform(width, d_in, rng))
                    });
                    let attention =
                        store.register(format!("neighbor.l{l}.h{k}.attn"), xavier_uniform(1, 2 * width, rng));
                    AttentionHead { projection, attention }
                })
                .collect();
            heads.push(layer);
        }
        Ok(Self {
            config,
            input_dim,
            heads,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.config.output_dim(self.input_dim)
    }

    pub fn layer_forward(
        &self,
        tape: &mut Tape,
        bind: &Binding,
        hoods: &Neighborhoods,
        input: &NodeInput,
        l: usize,
    ) -> Result<LayerOutput, TensorError> {
        let layer = self.heads.get(l).ok_or_else(|| {
            TensorError::Shape(format!("layer {l} of {}", self.config.layers))
        })?;
        let expected = self.config.layer_input_dim(self.input_dim, l);
        let width = input.width(tape);
        if width != expected {
            return Err(TensorError::Shape(format!(
                "layer {l} expects {expected} input columns, got {width}"
            )));
        }
        let dense = if self.config.faithful_dims {
            Some(input.materialize(tape)?)
        } else {
            None
        };
        let mut outputs = Vec::with_capacity(layer.len());
        let mut alphas = Vec::with_capacity(layer.len());
        for head in layer {
            let projected = match (head.projection, dense) {
                (Some(p), _) => input.project(tape, bind[p])?,
                (None, Some(d)) => d,
                (None, None) => unreachable!("projection-free heads only exist in faithful mode"),
            };
            let (out, alpha) = self.head_forward(tape, bind[head.attention], projected, hoods)?;
            outputs.push(out);
            alphas.push(alpha);
        }
        let output = if outputs.len() == 1 {
            outputs[0]
        } else {
            tape.concat_cols(&outputs)?
        };
        Ok(LayerOutput { output, alphas })
    }

    fn head_forward(
        &self,
        tape: &mut Tape,
        attention: Var,
        projected: Var,
        hoods: &Neighborhoods,
    ) -> Result<(Var, Var), TensorError> {
        let d = tape.value(projected).cols();
        let left = tape.slice_cols(attention, 0, d)?;
        let right = tape.slice_cols(attention, d, d)?;
        let own = tape.matmul_nt(projected, left)?;
        let other = tape.matmul_nt(projected, right)?;
        let own = tape.gather_rows(own, hoods.centers.clone())?;
        let other = tape.gather_rows(other, hoods.neighbors.clone())?;
        let scores = tape.add(own, other)?;
        let scores = tape.activation(scores, self.config.score_activation)?;
        let alpha = tape.segment_softmax(scores, hoods.segments.clone())?;
        let values = tape.gather_rows(projected, hoods.neighbors.clone())?;
        let pooled = tape.segment_sum(alpha, values, hoods.segments.clone())?;
        let out = tape.activation(pooled, self.config.aggregation_activation)?;
        Ok((out, alpha))
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        bind: &Binding,
        hoods: &Neighborhoods,
        input: &NodeInput,
    ) -> Result<NeighborhoodOutput, TensorError> {
        let mut current = self.layer_forward(tape, bind, hoods, input, 0)?;
        let mut alphas = vec![std::mem::take(&mut current.alphas)];
        for l in 1..self.config.layers {
            let next = NodeInput::dense(current.output);
            current = self.layer_forward(tape, bind, hoods, &next, l)?;
            alphas.push(std::mem::take(&mut current.alphas));
        }
        Ok(NeighborhoodOutput {
            output: current.output,
            alphas,
        })
    }
}

/// `α_ij` over `j ∈ neighbors` for node `i`, from head-projected rows `g_hat`.
pub fn attention_coefficients(
    g_hat: &Matrix,
    i: usize,
    neighbors: &[usize],
    attention: &[f64],
    score_activation: Activation,
) -> Result<Vec<f64>, TensorError> {
    let d = g_hat.cols();
    if attention.len() != 2 * d {
        return Err(TensorError::Shape(format!(
            "attention vector of length {} for {d}-wide rows",
            attention.len()
        )));
    }
    let mut scores = vec![f64::NEG_INFINITY; g_hat.rows()];
    for &j in neighbors {
        let raw: f64 = (0..d)
            .map(|c| attention[c] * g_hat.get(i, c) + attention[d + c] * g_hat.get(j, c))
            .sum();
        scores[j] = score_activation.apply(raw);
    }
    let full = masked_softmax(&scores, neighbors)?;
    Ok(neighbors.iter().map(|&j| full[j]).collect())
}

/// `σ(Σ_j α_j ĝ_j)`.
pub fn aggregate_head(
    g_hat: &Matrix,
    neighbors: &[usize],
    alpha: &[f64],
    aggregation_activation: Activation,
) -> Result<Vec<f64>, TensorError> {
    if alpha.len() != neighbors.len() {
        return Err(TensorError::Shape(format!(
            "{} coefficients for {} neighbors",
            alpha.len(),
            neighbors.len()
        )));
    }
    let mut out = vec![0.0; g_hat.cols()];
    for (&j, &a) in neighbors.iter().zip(alpha) {
        for (o, v) in out.iter_mut().zip(g_hat.row(j)) {
            *o += a * v;
        }
    }
    Ok(out.into_iter().map(|v| aggregation_activation.apply(v)).collect())
}

/// Positions of the E×1 α column that belong to node `i`.
pub fn node_alphas<'a>(alpha: &'a Matrix, hoods: &Neighborhoods, i: usize) -> &'a [f64] {
    &alpha.as_slice()[hoods.segments.range(i)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{MultiRelationGraph, RelationEdgeList};
    use crate::seed::rng_for;

    fn path_graph(n: usize) -> MultiRelationGraph {
        let (list, _) = RelationEdgeList::from_pairs(0, (0..n - 1).map(|i| (i, i + 1)));
        let feats = Matrix::from_vec(n, 2, (0..2 * n).map(|v| (v as f64 * 0.37).sin()).collect()).unwrap();
        MultiRelationGraph::assemble(feats, vec![None; n], &[list], vec!["r".into()]).unwrap()
    }

    #[test]
    fn zero_attention_vector_is_uniform() {
        let g = Matrix::from_vec(3, 2, vec![1.0, 2.0, -1.0, 0.5, 3.0, 0.0]).unwrap();
        let alpha = attention_coefficients(&g, 0, &[0, 1, 2], &[0.0; 4], Activation::leaky_relu()).unwrap();
        for a in alpha {
            assert!((a - 1.0 / 3.0).abs() < 1e-15);
        }
        let alone = attention_coefficients(&g, 1, &[1], &[0.3, -0.2, 1.0, 0.7], Activation::leaky_relu()).unwrap();
        assert_eq!(alone, vec![1.0]);
    }

    #[test]
    fn identical_neighbors_ignore_alpha() {
        let g = Matrix::from_rows(&[vec![0.4, -0.3], vec![0.4, -0.3]]).unwrap();
        let out = aggregate_head(&g, &[0, 1], &[0.9, 0.1], Activation::Tanh).unwrap();
        assert!((out[0] - 0.4f64.tanh()).abs() < 1e-15);
        assert!((out[1] - (-0.3f64).tanh()).abs() < 1e-15);
    }

    #[test]
    fn output_width_follows_config() {
        let graph = path_graph(5);
        let hoods = graph.neighborhoods();
        let mut store = ParamStore::new();
        let cfg = NeighborhoodConfig {
            layers: 2,
            heads: 3,
            head_dim: 4,
            ..NeighborhoodConfig::default()
        };
        let na = NeighborhoodAttention::new(&mut store, cfg, 2, &mut rng_for(1, "t")).unwrap();
        let mut tape = Tape::new();
        let bind = store.bind(&mut tape).unwrap();
        let x = tape.constant(graph.features().clone()).unwrap();
        let out = na.forward(&mut tape, &bind, &hoods, &NodeInput::dense(x)).unwrap();
        assert_eq!(tape.value(out.output).shape(), (5, 12));
        assert_eq!(na.output_dim(), 12);

        let faithful = NeighborhoodConfig::faithful(2, 3);
        assert_eq!(faithful.layer_input_dim(2, 1), 6);
        assert_eq!(faithful.output_dim(2), 18);
    }

    #[test]
    fn rejects_wrong_input_width() {
        let graph = path_graph(4);
        let hoods = graph.neighborhoods();
        let mut store = ParamStore::new();
        let na = NeighborhoodAttention::new(&mut store, NeighborhoodConfig::default(), 3, &mut rng_for(2, "t")).unwrap();
        let mut tape = Tape::new();
        let bind = store.bind(&mut tape).unwrap();
        let x = tape.constant(graph.features().clone()).unwrap();
        assert!(na.forward(&mut tape, &bind, &hoods, &NodeInput::dense(x)).is_err());
    }
}
