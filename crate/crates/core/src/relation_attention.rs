//! Relation-level attention.
//!
//! Each relation gets an importance `w_r = (1/N) Σ_i qᵀ tanh(W a_i^r + b)`,
//! with `W`, `b`, `q` shared by all relations. The softmax of the importances
//! gives the relation weights `β`, and the local embedding of node `i` is the
//! β-weighted sum of its adjacency rows.

use rand::Rng;

use crate::graph::{GraphError, MultiRelationGraph};
use crate::input::LocalEmbedding;
use crate::tensor::{softmax, xavier_uniform, Binding, Matrix, ParamId, ParamStore, Tape, TensorError, Var};

pub const DEFAULT_RELATION_HIDDEN: usize = 64;

/// Parameters `W` (hidden×N), `b` (1×hidden) and `q` (1×hidden).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelationAttention {
    pub weight: ParamId,
    pub bias: ParamId,
    pub query: ParamId,
}

/// Tape outputs of the relation attention module.
#[derive(Debug, Clone)]
pub struct RelationOutput {
    /// 1×R importances `w_r`.
    pub importance: Var,
    /// 1×R weights `β`.
    pub beta: Var,
    pub local: LocalEmbedding,
}

impl RelationAttention {
    /// Xavier-uniform `W` and `q`, zero `b`.
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, num_nodes: usize, hidden: usize, rng: &mut R) -> Self {
        let weight = store.register("relation.weight", xavier_uniform(hidden, num_nodes, rng));
        let bias = store.register("relation.bias", Matrix::zeros(1, hidden));
        let query = store.register("relation.query", xavier_uniform(1, hidden, rng));
        Self { weight, bias, query }
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        bind: &Binding,
        graph: &MultiRelationGraph,
    ) -> Result<RelationOutput, TensorError> {
        let wt = tape.transpose(bind[self.weight])?;
        let mut scores = Vec::with_capacity(graph.num_relations());
        for a in graph.relations() {
            let pre = tape.spmm(a.clone(), wt)?;
            let pre = tape.add_row(pre, bind[self.bias])?;
            let hidden = tape.tanh(pre)?;
            let per_node = tape.matmul_nt(hidden, bind[self.query])?;
            scores.push(tape.mean_rows(per_node)?);
        }
        let importance = tape.concat_cols(&scores)?;
        let beta = tape.softmax_rows(importance)?;
        Ok(RelationOutput {
            importance,
            beta,
            local: LocalEmbedding {
                beta,
                relations: graph.relations().to_vec(),
            },
        })
    }

    /// `w_r` for one relation.
    pub fn relation_importance(
        &self,
        store: &ParamStore,
        graph: &MultiRelationGraph,
        r: usize,
    ) -> Result<f64, GraphError> {
        if r >= graph.num_relations() {
            return Err(GraphError::OutOfRange(format!(
                "relation {r} with {} relations",
                graph.num_relations()
            )));
        }
        Ok(self.importances(store, graph)?[r])
    }

    /// All `w_r`, in relation order.
    pub fn importances(&self, store: &ParamStore, graph: &MultiRelationGraph) -> Result<Vec<f64>, GraphError> {
        let mut tape = Tape::new();
        let bind = store.bind(&mut tape)?;
        let out = self.forward(&mut tape, &bind, graph)?;
        Ok(tape.value(out.importance).as_slice().to_vec())
    }
}

/// `β = softmax(w)`.
pub fn relation_weights(importance: &[f64]) -> Vec<f64> {
    softmax(importance)
}

/// Dense `h_i = Σ_r β_r a_i^r`.
pub fn local_embedding(graph: &MultiRelationGraph, i: usize, beta: &[f64]) -> Result<Vec<f64>, GraphError> {
    if beta.len() != graph.num_relations() {
        return Err(GraphError::Invalid(format!(
            "{} relation weights for {} relations",
            beta.len(),
            graph.num_relations()
        )));
    }
    let mut h = vec![0.0; graph.num_nodes()];
    for (r, &b) in beta.iter().enumerate() {
        for &j in graph.adjacency_row(r, i)? {
            h[j] += b;
        }
    }
    Ok(h)
}
