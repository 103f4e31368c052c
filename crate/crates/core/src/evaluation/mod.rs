//! Metrics, camouflage statistics and the ablation / λ-sweep drivers.

mod camouflage;
mod drivers;
mod metrics;

use thiserror::Error;

pub use camouflage::{
    avg_feature_similarity, avg_label_similarity, camouflage_report, write_camouflage_report, CamouflageRow, EdgeSet,
    FeatureSimilarity, CAMOUFLAGE_FILE,
};
pub use drivers::{
    ablate, lambda_sweep, mean_auc_by_key, write_comparison, ComparisonRow, ABLATION_FILE, DEFAULT_LAMBDAS, LAMBDA_SWEEP_FILE,
};
pub use metrics::{auc, recall, MetricReport, DEFAULT_THRESHOLD};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("AUC needs both classes, got {pos} positives and {neg} negatives")]
    DegenerateClass { pos: usize, neg: usize },
    #[error("recall needs at least one positive")]
    NoPositives,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("score is NaN")]
    NanScore,
    #[error("no edge has two labeled endpoints")]
    NoEligibleEdges,
    #[error("relation has no edges")]
    EmptyRelation,
    #[error("unknown relation {0}")]
    UnknownRelation(usize),
    #[error("csv: {0}")]
    Csv(String),
}
