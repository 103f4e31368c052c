//! Multi-run comparisons: variant ablation and the λ sweep. Runs are
//! independent and execute on a bounded thread pool; rows always come back
//! in (seed, key) order.

use std::path::Path;

use rayon::prelude::*;

use super::{MetricError, MetricReport};
use crate::graph::{split_nodes, MultiRelationGraph};
use crate::training::{train, TrainConfig, TrainError, Variant};

pub const ABLATION_FILE: &str = "ablation.csv";
pub const LAMBDA_SWEEP_FILE: &str = "lambda_sweep.csv";
pub const DEFAULT_LAMBDAS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

/// Test-set metrics of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    /// Variant name or λ value.
    pub key: String,
    pub seed: u64,
    pub report: MetricReport,
    pub split_digest: String,
}

fn run_one(graph: &MultiRelationGraph, config: TrainConfig, key: String) -> Result<ComparisonRow, TrainError> {
    let split = split_nodes(graph.labels(), config.train_fraction, config.seed)?;
    let outcome = train(graph, &split, &config)?;
    let probs = outcome.state.forward_pass(graph)?.probs;
    let report = MetricReport::for_nodes(&probs, &split.test_legit, &split.test_fraud, config.threshold)
        .map_err(|e| TrainError::Config(format!("test metrics: {e}")))?;
    Ok(ComparisonRow {
        key,
        seed: config.seed,
        report,
        split_digest: split.digest(),
    })
}

fn run_all(
    graph: &MultiRelationGraph,
    runs: Vec<(TrainConfig, String)>,
    jobs: usize,
) -> Result<Vec<ComparisonRow>, TrainError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| TrainError::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        runs.into_par_iter()
            .map(|(config, key)| run_one(graph, config, key))
            .collect()
    })
}

/// One run per `(seed, variant)`; every variant of a seed sees the same split.
pub fn ablate(
    graph: &MultiRelationGraph,
    base: &TrainConfig,
    variants: &[Variant],
    seeds: &[u64],
    jobs: usize,
) -> Result<Vec<ComparisonRow>, TrainError> {
    let runs = seeds
        .iter()
        .flat_map(|&seed| {
            variants.iter().map(move |&variant| {
                let config = TrainConfig {
                    seed,
                    variant,
                    ..base.clone()
                };
                (config, variant.name().to_string())
            })
        })
        .collect();
    run_all(graph, runs, jobs)
}

/// One run per `(seed, λ)`.
pub fn lambda_sweep(
    graph: &MultiRelationGraph,
    base: &TrainConfig,
    lambdas: &[f64],
    seeds: &[u64],
    jobs: usize,
) -> Result<Vec<ComparisonRow>, TrainError> {
    let runs = seeds
        .iter()
        .flat_map(|&seed| {
            lambdas.iter().map(move |&lambda| {
                let config = TrainConfig {
                    seed,
                    lambda,
                    ..base.clone()
                };
                (config, lambda.to_string())
            })
        })
        .collect();
    run_all(graph, runs, jobs)
}

/// `variant_or_lambda,auc,recall,seed` rows.
pub fn write_comparison(path: &Path, rows: &[ComparisonRow]) -> Result<(), MetricError> {
    let err = |e: csv::Error| MetricError::Csv(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(["variant_or_lambda", "auc", "recall", "seed"]).map_err(err)?;
    for row in rows {
        w.write_record([
            row.key.clone(),
            row.report.auc.to_string(),
            row.report.recall.to_string(),
            row.seed.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| MetricError::Csv(e.to_string()))
}

/// Mean AUC per key, in first-seen key order.
pub fn mean_auc_by_key(rows: &[ComparisonRow]) -> Vec<(String, f64)> {
    let mut keys: Vec<String> = Vec::new();
    for r in rows {
        if !keys.contains(&r.key) {
            keys.push(r.key.clone());
        }
    }
    keys.into_iter()
        .map(|k| {
            let vals: Vec<f64> = rows.iter().filter(|r| r.key == k).map(|r| r.report.auc).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            (k, mean)
        })
        .collect()
}
