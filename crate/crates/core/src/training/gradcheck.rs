//! End-to-end central-difference check of every model parameter.

use std::sync::Arc;

use rand::Rng;

use super::{ModelState, TrainConfig, TrainError};
use crate::fusion::loss_targets;
use crate::graph::{generate_synthetic, split_nodes, DatasetSplit, MultiRelationGraph, SynthConfig};
use crate::seed::rng_for;
use crate::tensor::gradcheck::{check_store, TensorCheck};
use crate::tensor::{BceTarget, ParamStore, Tape, TensorError};

pub const GRADCHECK_NODES: usize = 12;
pub const GRADCHECK_RELATIONS: usize = 3;
pub const DEFAULT_GRADCHECK_EPS: f64 = 1e-5;
pub const DEFAULT_GRADCHECK_TOL: f64 = 1e-4;

/// Random 12-node, 3-relation graph with a half/half stratified split.
pub fn gradcheck_graph(seed: u64) -> Result<(MultiRelationGraph, DatasetSplit), TrainError> {
    let config = SynthConfig {
        num_nodes: GRADCHECK_NODES,
        fraud_fraction: 1.0 / 3.0,
        num_relations: GRADCHECK_RELATIONS,
        edge_probs: vec![0.4, 0.3, 0.25],
        camouflage_rate: 0.3,
        feature_dim: 4,
        feature_camouflage_rate: 0.25,
        feature_shift: 1.0,
        balance_degrees: false,
        seed,
    };
    let (graph, _) = generate_synthetic(&config)?;
    let split = split_nodes(graph.labels(), 0.5, seed)?;
    Ok((graph, split))
}

fn loss_of(
    store: &ParamStore,
    state: &ModelState,
    graph: &MultiRelationGraph,
    hoods: &crate::graph::Neighborhoods,
    targets: &Arc<[BceTarget]>,
) -> Result<(Tape, crate::tensor::Binding, crate::tensor::Var), TensorError> {
    let mut tape = Tape::new();
    let bind = store.bind(&mut tape)?;
    let out = state.model.forward(&mut tape, &bind, graph, hoods)?;
    let loss = tape.weighted_bce(out.logits, targets.clone())?;
    Ok((tape, bind, loss))
}

/// Zero-initialized tensors (the biases) put leaky-relu inputs of rows with
/// no edges exactly on the kink, where central differences are meaningless.
/// Checking at a generic point avoids that.
fn jitter_zero_tensors(store: &mut ParamStore, seed: u64) {
    let mut rng = rng_for(seed, "gradcheck");
    for m in store.values_mut() {
        if m.as_slice().iter().all(|&v| v == 0.0) {
            for v in m.as_mut_slice() {
                *v = rng.random_range(-0.1..0.1);
            }
        }
    }
}

/// One entry per parameter tensor, in registration order.
pub fn model_gradcheck(
    graph: &MultiRelationGraph,
    split: &DatasetSplit,
    config: &TrainConfig,
    eps: f64,
) -> Result<Vec<TensorCheck>, TrainError> {
    let mut state = ModelState::init(graph, config)?;
    jitter_zero_tensors(&mut state.params, config.seed);
    let hoods = graph.neighborhoods();
    let targets = loss_targets(split, graph.num_nodes(), config.lambda)?;
    let (mut tape, bind, loss) = loss_of(&state.params, &state, graph, &hoods, &targets)?;
    tape.backward(loss)?;
    let analytic = bind.grads(&tape);
    let checks = check_store(&state.params, &analytic, eps, |store| {
        let (tape, _, loss) = loss_of(store, &state, graph, &hoods, &targets)?;
        Ok(tape.value(loss).item())
    })?;
    Ok(checks)
}
