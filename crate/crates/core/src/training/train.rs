use std::path::Path;
use std::sync::Arc;

use super::{ModelState, TrainConfig, TrainError};
use crate::evaluation::{auc, recall};
use crate::fusion::loss_targets;
use crate::graph::{DatasetSplit, MultiRelationGraph, Neighborhoods};
use crate::tensor::{Adam, BceTarget, Binding, Tape, TensorError, Var};

pub const TRAIN_LOG_FILE: &str = "train_log.csv";

/// Metrics after the optimizer step of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub train_auc: f64,
    pub train_recall: f64,
    pub test_auc: f64,
    pub test_recall: f64,
    pub beta: Vec<f64>,
    pub phi: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub state: ModelState,
    pub logs: Vec<EpochLog>,
}

/// Train/test metrics for a probability vector; NaN where a set lacks a class.
pub fn split_metrics(probs: &[f64], split: &DatasetSplit, threshold: f64) -> [(f64, f64); 2] {
    [
        (&split.train_legit, &split.train_fraud),
        (&split.test_legit, &split.test_fraud),
    ]
    .map(|(legit, fraud)| {
        let scores: Vec<f64> = legit.iter().chain(fraud.iter()).map(|&i| probs[i]).collect();
        let labels: Vec<bool> = legit.iter().map(|_| false).chain(fraud.iter().map(|_| true)).collect();
        (
            auc(&scores, &labels).unwrap_or(f64::NAN),
            recall(&scores, &labels, threshold).unwrap_or(f64::NAN),
        )
    })
}

struct Evaluated {
    tape: Tape,
    bind: Binding,
    loss: Var,
    log: EpochLog,
}

fn evaluate(
    state: &ModelState,
    graph: &MultiRelationGraph,
    hoods: &Neighborhoods,
    split: &DatasetSplit,
    targets: &Arc<[BceTarget]>,
    epoch: usize,
) -> Result<Evaluated, TensorError> {
    let mut tape = Tape::new();
    let bind = state.params.bind(&mut tape)?;
    let out = state.model.forward(&mut tape, &bind, graph, hoods)?;
    let loss = tape.weighted_bce(out.logits, targets.clone())?;
    let probs = tape.value(out.probs).as_slice().to_vec();
    let [(train_auc, train_recall), (test_auc, test_recall)] = split_metrics(&probs, split, state.config.threshold);
    let log = EpochLog {
        epoch,
        loss: tape.value(loss).item(),
        train_auc,
        train_recall,
        test_auc,
        test_recall,
        beta: tape.value(out.beta).as_slice().to_vec(),
        phi: state.model.mean_phi(&tape, &out),
    };
    Ok(Evaluated { tape, bind, loss, log })
}

/// Full-batch training from a fresh initialization.
pub fn train(graph: &MultiRelationGraph, split: &DatasetSplit, config: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    let state = ModelState::init(graph, config)?;
    train_state(state, graph, split, config.epochs)
}

/// Runs `epochs` more epochs on `state`. On a numeric failure the error
/// carries the parameters from before the failing step.
pub fn train_state(
    mut state: ModelState,
    graph: &MultiRelationGraph,
    split: &DatasetSplit,
    epochs: usize,
) -> Result<TrainOutcome, TrainError> {
    state.check_graph(graph)?;
    if split.train_legit.is_empty() || split.train_fraud.is_empty() {
        return Err(TrainError::Config("training split needs both classes".into()));
    }
    let hoods = graph.neighborhoods();
    let targets = loss_targets(split, graph.num_nodes(), state.config.lambda)?;
    let adam = Adam::new(state.config.lr);
    let first_epoch = state.adam.step as usize + 1;
    let mut logs = Vec::with_capacity(epochs);
    let mut current = evaluate(&state, graph, &hoods, split, &targets, first_epoch - 1)?;
    for epoch in first_epoch..first_epoch + epochs {
        let backup = (state.params.clone(), state.adam.clone());
        let step = |state: &mut ModelState, mut cur: Evaluated| -> Result<Evaluated, TensorError> {
            cur.tape.backward(cur.loss)?;
            let grads = cur.bind.grads(&cur.tape);
            adam.step(state.params.values_mut(), &grads, &mut state.adam)?;
            if state.params.values().iter().any(|m| !m.is_finite()) {
                return Err(TensorError::NonFinite { op: "adam" });
            }
            evaluate(state, graph, &hoods, split, &targets, epoch)
        };
        match step(&mut state, current) {
            Ok(next) => {
                logs.push(next.log.clone());
                current = next;
            }
            Err(source) => {
                state.params = backup.0;
                state.adam = backup.1;
                return Err(TrainError::Numeric {
                    epoch,
                    source,
                    last_good: Box::new(TrainOutcome { state, logs }),
                });
            }
        }
    }
    Ok(TrainOutcome { state, logs })
}

pub fn train_log_header(num_relations: usize) -> Vec<String> {
    let mut header: Vec<String> = ["epoch", "loss", "train_auc", "train_recall", "test_auc", "test_recall"]
        .map(String::from)
        .to_vec();
    header.extend((1..=num_relations).map(|r| format!("beta_{r}")));
    header.extend(["phi_local", "phi_longrange", "phi_feature"].map(String::from));
    header
}

pub fn write_train_log(path: &Path, num_relations: usize, logs: &[EpochLog]) -> Result<(), TrainError> {
    let io = |e: csv::Error| TrainError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(train_log_header(num_relations)).map_err(io)?;
    for log in logs {
        let mut row = vec![
            log.epoch.to_string(),
            log.loss.to_string(),
            log.train_auc.to_string(),
            log.train_recall.to_string(),
            log.test_auc.to_string(),
            log.test_recall.to_string(),
        ];
        row.extend(log.beta.iter().map(f64::to_string));
        row.extend(log.phi.iter().map(f64::to_string));
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| TrainError::Io(format!("{}: {e}", path.display())))
}
