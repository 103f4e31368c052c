//! Multi-relation graph storage, ingestion, and synthetic generation.
//!
//! A [`MultiRelationGraph`] holds one node set, `R` binary symmetric
//! adjacency structures without self-loops, a feature matrix, and optional
//! binary labels. Graphs are immutable once assembled.

mod events;
mod io;
mod split;
mod synth;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{Matrix, Segments, SparseMatrix, TensorError};

pub use events::{
    build_relations_from_events, CliqueReport, EventTable, GroupRule, SubsampledGroup,
    DEFAULT_GROUP_CAP,
};
pub use io::{
    load_dataset, load_nodes, load_relation_edges, save_dataset, write_edges, write_nodes,
    EdgeLoad, NODES_FILE,
};
pub use split::{split_nodes, DatasetSplit, DEFAULT_TRAIN_FRACTION};
pub use synth::{generate_synthetic, SynthConfig, SYNTH_META_FILE};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("{path}: {message} at line {line}")]
    Ingest {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown grouping rule `{0}`")]
    UnknownRule(String),
    #[error("event table has no column `{0}`")]
    MissingColumn(String),
    #[error("cannot split: {0}")]
    Split(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Legit,
    Fraud,
}

impl Label {
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Label::Legit),
            1 => Some(Label::Fraud),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Label::Legit => 0,
            Label::Fraud => 1,
        }
    }

    pub fn is_fraud(self) -> bool {
        self == Label::Fraud
    }
}

/// Canonical undirected edge set of one relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationEdgeList {
    pub relation_id: usize,
    edges: Vec<(usize, usize)>,
}

impl RelationEdgeList {
    /// Canonicalizes pairs to `(min, max)`, sorts, deduplicates and drops
    /// self-pairs. Returns the list and the number of self-pairs dropped.
    pub fn from_pairs(relation_id: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> (Self, usize) {
        let mut self_pairs = 0;
        let set: BTreeSet<(usize, usize)> = pairs
            .into_iter()
            .filter(|&(a, b)| {
                if a == b {
                    self_pairs += 1;
                }
                a != b
            })
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        (
            Self {
                relation_id,
                edges: set.into_iter().collect(),
            },
            self_pairs,
        )
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Union neighborhoods `𝒩_i` (neighbors across all relations plus `i`) laid
/// out as flat segments: positions `segments.range(i)` of `neighbors` hold
/// `𝒩_i` ascending, and `centers[e]` is the node that owns position `e`.
#[derive(Debug, Clone)]
pub struct Neighborhoods {
    pub segments: Arc<Segments>,
    pub neighbors: Arc<[usize]>,
    pub centers: Arc<[usize]>,
}

impl Neighborhoods {
    pub fn of(&self, i: usize) -> &[usize] {
        &self.neighbors[self.segments.range(i)]
    }

    pub fn num_entries(&self) -> usize {
        self.neighbors.len()
    }
}

#[derive(Debug, Clone)]
pub struct MultiRelationGraph {
    relation_names: Vec<String>,
    relations: Vec<Arc<SparseMatrix>>,
    features: Matrix,
    labels: Vec<Option<Label>>,
}

impl MultiRelationGraph {
    /// Builds per-relation symmetric adjacency from validated edge lists.
    pub fn assemble(
        features: Matrix,
        labels: Vec<Option<Label>>,
        edge_lists: &[RelationEdgeList],
        relation_names: Vec<String>,
    ) -> Result<Self, GraphError> {
        let n = labels.len();
        if features.rows() != n {
            return Err(GraphError::Invalid(format!(
                "feature matrix has {} rows for {n} nodes",
                features.rows()
            )));
        }
        if edge_lists.is_empty() {
            return Err(GraphError::Invalid("at least one relation is required".into()));
        }
        if relation_names.len() != edge_lists.len() {
            return Err(GraphError::Invalid(format!(
                "{} relation names for {} edge lists",
                relation_names.len(),
                edge_lists.len()
            )));
        }
        let mut relations = Vec::with_capacity(edge_lists.len());
        for list in edge_lists {
            let mut rows = vec![Vec::new(); n];
            for &(a, b) in list.edges() {
                if a >= n || b >= n {
                    return Err(GraphError::OutOfRange(format!(
                        "relation {} edge ({a},{b}) with {n} nodes",
                        list.relation_id
                    )));
                }
                rows[a].push(b);
                rows[b].push(a);
            }
            for row in &mut rows {
                row.sort_unstable();
                row.dedup();
            }
            relations.push(Arc::new(SparseMatrix::from_rows(n, &rows)?));
        }
        Ok(Self {
            relation_names,
            relations,
            features,
            labels,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[Option<Label>] {
        &self.labels
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relation_names
    }

    pub fn relation(&self, r: usize) -> &Arc<SparseMatrix> {
        &self.relations[r]
    }

    pub fn relations(&self) -> &[Arc<SparseMatrix>] {
        &self.relations
    }

    fn check_node(&self, i: usize) -> Result<(), GraphError> {
        if i >= self.num_nodes() {
            return Err(GraphError::OutOfRange(format!(
                "node {i} with {} nodes",
                self.num_nodes()
            )));
        }
        Ok(())
    }

    /// Nonzero columns of `a_i^r`, ascending. Every stored value is 1.
    pub fn adjacency_row(&self, r: usize, i: usize) -> Result<&[usize], GraphError> {
        if r >= self.num_relations() {
            return Err(GraphError::OutOfRange(format!(
                "relation {r} with {} relations",
                self.num_relations()
            )));
        }
        self.check_node(i)?;
        Ok(self.relations[r].row(i))
    }

    /// Dense binary `a_i^r`.
    pub fn adjacency_row_dense(&self, r: usize, i: usize) -> Result<Vec<f64>, GraphError> {
        let mut out = vec![0.0; self.num_nodes()];
        for &j in self.adjacency_row(r, i)? {
            out[j] = 1.0;
        }
        Ok(out)
    }

    pub fn degree(&self, r: usize, i: usize) -> usize {
        self.relations[r].row(i).len()
    }

    /// `𝒩_i`: union of neighbors over all relations together with `i`, ascending.
    pub fn neighbor_union(&self, i: usize) -> Result<Vec<usize>, GraphError> {
        self.check_node(i)?;
        Ok(self.union_row(i))
    }

    fn union_row(&self, i: usize) -> Vec<usize> {
        let mut set: Vec<usize> = self
            .relations
            .iter()
            .flat_map(|a| a.row(i).iter().copied())
            .chain(std::iter::once(i))
            .collect();
        set.sort_unstable();
        set.dedup();
        set
    }

    /// All union neighborhoods in segment layout.
    pub fn neighborhoods(&self) -> Neighborhoods {
        let n = self.num_nodes();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        let mut centers = Vec::new();
        offsets.push(0);
        for i in 0..n {
            let row = self.union_row(i);
            centers.extend(std::iter::repeat_n(i, row.len()));
            neighbors.extend(row);
            offsets.push(neighbors.len());
        }
        Neighborhoods {
            segments: Arc::new(Segments::from_offsets(offsets).expect("offsets are monotone")),
            neighbors: neighbors.into(),
            centers: centers.into(),
        }
    }

    /// Canonical `(u, v)`, `u < v` edges of relation `r`.
    pub fn relation_edges(&self, r: usize) -> Vec<(usize, usize)> {
        let a = &self.relations[r];
        (0..self.num_nodes())
            .flat_map(|i| a.row(i).iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }

    /// Deduplicated union of every relation's edges.
    pub fn union_edges(&self) -> Vec<(usize, usize)> {
        (0..self.num_nodes())
            .flat_map(|i| {
                self.union_row(i)
                    .into_iter()
                    .filter(move |&j| j > i)
                    .map(move |j| (i, j))
            })
            .collect()
    }

    pub fn edge_lists(&self) -> Vec<RelationEdgeList> {
        (0..self.num_relations())
            .map(|r| RelationEdgeList::from_pairs(r, self.relation_edges(r)).0)
            .collect()
    }

    /// Re-checks every structural invariant; used by audits.
    pub fn validate(&self) -> Result<(), GraphError> {
        let n = self.num_nodes();
        if self.relations.is_empty() {
            return Err(GraphError::Invalid("no relations".into()));
        }
        if self.features.rows() != n {
            return Err(GraphError::Invalid("feature rows differ from node count".into()));
        }
        for (r, a) in self.relations.iter().enumerate() {
            for i in 0..n {
                for &j in a.row(i) {
                    if j == i {
                        return Err(GraphError::Invalid(format!("relation {r} has self-loop at {i}")));
                    }
                    if !a.contains(j, i) {
                        return Err(GraphError::Invalid(format!(
                            "relation {r} is asymmetric at ({i},{j})"
                        )));
                    }
                }
            }
        }
        if !self.features.is_finite() {
            return Err(GraphError::Invalid("non-finite feature value".into()));
        }
        Ok(())
    }

    /// Same graph with node `i` renamed to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, GraphError> {
        let n = self.num_nodes();
        if perm.len() != n || {
            let mut seen = perm.to_vec();
            seen.sort_unstable();
            seen.iter().enumerate().any(|(k, &v)| k != v)
        } {
            return Err(GraphError::Invalid("not a permutation of the node ids".into()));
        }
        let mut features = Matrix::zeros(n, self.feature_dim());
        let mut labels = vec![None; n];
        for i in 0..n {
            features.row_mut(perm[i]).copy_from_slice(self.features.row(i));
            labels[perm[i]] = self.labels[i];
        }
        let lists: Vec<RelationEdgeList> = (0..self.num_relations())
            .map(|r| {
                RelationEdgeList::from_pairs(
                    r,
                    self.relation_edges(r).into_iter().map(|(a, b)| (perm[a], perm[b])),
                )
                .0
            })
            .collect();
        Self::assemble(features, labels, &lists, self.relation_names.clone())
    }

    /// Same graph without any edge incident to `i`.
    pub fn without_node_edges(&self, i: usize) -> Result<Self, GraphError> {
        self.check_node(i)?;
        let lists: Vec<RelationEdgeList> = (0..self.num_relations())
            .map(|r| {
                RelationEdgeList::from_pairs(
                    r,
                    self.relation_edges(r).into_iter().filter(|&(a, b)| a != i && b != i),
                )
                .0
            })
            .collect();
        Self::assemble(
            self.features.clone(),
            self.labels.clone(),
            &lists,
            self.relation_names.clone(),
        )
    }

    /// Same structure with replaced labels.
    pub fn with_labels(&self, labels: Vec<Option<Label>>) -> Result<Self, GraphError> {
        if labels.len() != self.num_nodes() {
            return Err(GraphError::Invalid("label vector length differs from node count".into()));
        }
        Ok(Self {
            labels,
            ..self.clone()
        })
    }

    /// Same structure with replaced features.
    pub fn with_features(&self, features: Matrix) -> Result<Self, GraphError> {
        if features.rows() != self.num_nodes() {
            return Err(GraphError::Invalid("feature rows differ from node count".into()));
        }
        Ok(Self {
            features,
            ..self.clone()
        })
    }
}
