//! Edge-level camouflage statistics: how often neighbors share a label and
//! how similar their features are.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::graph::MultiRelationGraph;

pub const CAMOUFLAGE_FILE: &str = "camouflage_report.csv";

/// Which edges to measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSet {
    Relation(usize),
    /// Deduplicated union of all relations.
    Union,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FeatureSimilarity {
    /// Mean of `exp(−‖x_u − x_v‖² / d)`.
    #[default]
    Normalized,
    /// `Σ exp(−‖x_u − x_v‖²) / (|E| · d)`.
    Raw,
}

impl FeatureSimilarity {
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "normalized" => Some(Self::Normalized),
            "raw" => Some(Self::Raw),
            _ => None,
        }
    }
}

fn edges(graph: &MultiRelationGraph, set: EdgeSet) -> Result<Vec<(usize, usize)>, MetricError> {
    match set {
        EdgeSet::Relation(r) if r >= graph.num_relations() => Err(MetricError::UnknownRelation(r)),
        EdgeSet::Relation(r) => Ok(graph.relation_edges(r)),
        EdgeSet::Union => Ok(graph.union_edges()),
    }
}

/// Fraction of edges with both endpoints labeled whose labels agree.
pub fn avg_label_similarity(graph: &MultiRelationGraph, set: EdgeSet) -> Result<f64, MetricError> {
    let labels = graph.labels();
    let (mut same, mut eligible) = (0usize, 0usize);
    for (u, v) in edges(graph, set)? {
        if let (Some(a), Some(b)) = (labels[u], labels[v]) {
            eligible += 1;
            same += usize::from(a == b);
        }
    }
    if eligible == 0 {
        return Err(MetricError::NoEligibleEdges);
    }
    Ok(same as f64 / eligible as f64)
}

pub fn avg_feature_similarity(
    graph: &MultiRelationGraph,
    set: EdgeSet,
    mode: FeatureSimilarity,
) -> Result<f64, MetricError> {
    let edges = edges(graph, set)?;
    if edges.is_empty() {
        return Err(MetricError::EmptyRelation);
    }
    let x = graph.features();
    let d = x.cols() as f64;
    let mut total = 0.0;
    for &(u, v) in &edges {
        let dist2: f64 = x.row(u).iter().zip(x.row(v)).map(|(a, b)| (a - b) * (a - b)).sum();
        total += match mode {
            FeatureSimilarity::Normalized => (-dist2 / d).exp(),
            FeatureSimilarity::Raw => (-dist2).exp(),
        };
    }
    Ok(match mode {
        FeatureSimilarity::Normalized => total / edges.len() as f64,
        FeatureSimilarity::Raw => total / (edges.len() as f64 * d),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CamouflageRow {
    pub relation: String,
    pub edges: usize,
    /// `None` when no edge has two labeled endpoints.
    pub label_similarity: Option<f64>,
    pub feature_similarity: Option<f64>,
}

/// One row per relation, then an `ALL` row for the union.
pub fn camouflage_report(graph: &MultiRelationGraph, mode: FeatureSimilarity) -> Result<Vec<CamouflageRow>, MetricError> {
    let sets = (0..graph.num_relations())
        .map(|r| (graph.relation_names()[r].clone(), EdgeSet::Relation(r)))
        .chain(std::iter::once(("ALL".to_string(), EdgeSet::Union)));
    let optional = |res: Result<f64, MetricError>| match res {
        Ok(v) => Ok(Some(v)),
        Err(MetricError::NoEligibleEdges | MetricError::EmptyRelation) => Ok(None),
        Err(e) => Err(e),
    };
    sets.map(|(relation, set)| {
        Ok(CamouflageRow {
            relation,
            edges: edges(graph, set)?.len(),
            label_similarity: optional(avg_label_similarity(graph, set))?,
            feature_similarity: optional(avg_feature_similarity(graph, set, mode))?,
        })
    })
    .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

pub fn write_camouflage_report(path: &Path, nodes: usize, rows: &[CamouflageRow]) -> Result<(), MetricError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| MetricError::Csv(e.to_string()))?;
    let mut write = |rec: &[String]| w.write_record(rec).map_err(|e| MetricError::Csv(e.to_string()));
    write(&["relation", "nodes", "edges", "avg_label_similarity", "avg_feature_similarity"].map(String::from))?;
    for row in rows {
        write(&[
            row.relation.clone(),
            nodes.to_string(),
            row.edges.to_string(),
            fmt_opt(row.label_similarity),
            fmt_opt(row.feature_similarity),
        ])?;
    }
    w.flush().map_err(|e| MetricError::Csv(e.to_string()))
}
