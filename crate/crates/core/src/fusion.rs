//! Information-level fusion of the local, long-range and feature embeddings,
//! the fraud classifier and the class-weighted loss.

use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::DatasetSplit;
use crate::input::NodeInput;
use crate::tensor::{
    xavier_uniform, Activation, BceTarget, Binding, Matrix, ParamId, ParamStore, Tape, TensorError, Var, PROB_CLAMP,
};

pub const DEFAULT_PROJ_HIDDEN: usize = 64;
pub const DEFAULT_EMBED_DIM: usize = 32;
pub const DEFAULT_FUSION_HIDDEN: usize = 32;
pub const DEFAULT_CLASSIFIER_HIDDEN: usize = 32;
pub const DEFAULT_LAMBDA: f64 = 0.4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("node {0} is in both the legit and the fraud set")]
    Overlap(usize),
    #[error("node {node} has no probability ({len} given)")]
    OutOfRange { node: usize, len: usize },
    #[error("lambda = {0} must be positive")]
    Lambda(f64),
}

/// The three embedding sources, in fusion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    Local,
    LongRange,
    Feature,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Local, Source::LongRange, Source::Feature];

    pub fn name(self) -> &'static str {
        match self {
            Source::Local => "local",
            Source::LongRange => "longrange",
            Source::Feature => "feature",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub proj_hidden: usize,
    pub embed_dim: usize,
    pub fusion_hidden: usize,
    pub classifier_hidden: usize,
    pub activation: Activation,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            proj_hidden: DEFAULT_PROJ_HIDDEN,
            embed_dim: DEFAULT_EMBED_DIM,
            fusion_hidden: DEFAULT_FUSION_HIDDEN,
            classifier_hidden: DEFAULT_CLASSIFIER_HIDDEN,
            activation: Activation::leaky_relu(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, out: usize, inp: usize, rng: &mut R) -> Self {
        Self {
            weight: store.register(format!("{name}.weight"), xavier_uniform(out, inp, rng)),
            bias: store.register(format!("{name}.bias"), Matrix::zeros(1, out)),
        }
    }

    pub fn apply(&self, tape: &mut Tape, bind: &Binding, x: Var) -> Result<Var, TensorError> {
        tape.linear(x, bind[self.weight], bind[self.bias])
    }
}

/// `M(·)`: a per-source first layer followed by a shared second layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    /// Indexed by `Source::index`; `None` for sources a variant never projects.
    pub first: [Option<Dense>; 3],
    pub second: Dense,
    pub activation: Activation,
}

impl Projector {
    /// `widths[s]` is the input width of source `s`, `None` to skip it.
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        config: &FusionConfig,
        widths: [Option<usize>; 3],
        rng: &mut R,
    ) -> Self {
        let mut first = [None; 3];
        for s in Source::ALL {
            if let Some(w) = widths[s.index()] {
                first[s.index()] = Some(Dense::new(store, &format!("proj.{}", s.name()), config.proj_hidden, w, rng));
            }
        }
        let second = Dense::new(store, "proj.shared", config.embed_dim, config.proj_hidden, rng);
        Self {
            first,
            second,
            activation: config.activation,
        }
    }

    pub fn project(&self, tape: &mut Tape, bind: &Binding, source: Source, input: &NodeInput) -> Result<Var, TensorError> {
        let first = self.first[source.index()].ok_or_else(|| {
            TensorError::Shape(format!("no projection for the {} source", source.name()))
        })?;
        let hidden = input.linear(tape, bind[first.weight], bind[first.bias])?;
        let hidden = tape.activation(hidden, self.activation)?;
        self.second.apply(tape, bind, hidden)
    }
}

/// `η(e) = pᵀ tanh(W' e + b')`, shared across sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InfoAttention {
    pub weight: ParamId,
    pub bias: ParamId,
    pub query: ParamId,
}

#[derive(Debug, Clone, Copy)]
pub struct Fused {
    /// N×S source scores `η`.
    pub eta: Var,
    /// N×S source weights `φ`.
    pub phi: Var,
    /// N×embed fused embedding `z`.
    pub z: Var,
}

impl InfoAttention {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, config: &FusionConfig, rng: &mut R) -> Self {
        Self {
            weight: store.register("info.weight", xavier_uniform(config.fusion_hidden, config.embed_dim, rng)),
            bias: store.register("info.bias", Matrix::zeros(1, config.fusion_hidden)),
            query: store.register("info.query", xavier_uniform(1, config.fusion_hidden, rng)),
        }
    }

    /// N×1 scores for one projected source.
    pub fn score(&self, tape: &mut Tape, bind: &Binding, projected: Var) -> Result<Var, TensorError> {
        let hidden = tape.linear(projected, bind[self.weight], bind[self.bias])?;
        let hidden = tape.tanh(hidden)?;
        tape.matmul_nt(hidden, bind[self.query])
    }

    /// Per-node softmax over the sources and the weighted sum `z = Σ φ_s M_s`.
    pub fn fuse(&self, tape: &mut Tape, bind: &Binding, projected: &[Var]) -> Result<Fused, TensorError> {
        let scores = projected
            .iter()
            .map(|&m| self.score(tape, bind, m))
            .collect::<Result<Vec<_>, _>>()?;
        let eta = tape.concat_cols(&scores)?;
        let phi = tape.softmax_rows(eta)?;
        let z = tape.weighted_sum(projected, phi)?;
        Ok(Fused { eta, phi, z })
    }
}

/// Logit MLP `embed → hidden → 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classifier {
    pub hidden: Dense,
    pub output: Dense,
    pub activation: Activation,
}

impl Classifier {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, config: &FusionConfig, rng: &mut R) -> Self {
        Self {
            hidden: Dense::new(store, "classifier.hidden", config.classifier_hidden, config.embed_dim, rng),
            output: Dense::new(store, "classifier.output", 1, config.classifier_hidden, rng),
            activation: config.activation,
        }
    }

    pub fn logits(&self, tape: &mut Tape, bind: &Binding, z: Var) -> Result<Var, TensorError> {
        let h = self.hidden.apply(tape, bind, z)?;
        let h = tape.activation(h, self.activation)?;
        self.output.apply(tape, bind, h)
    }

    pub fn predict(&self, tape: &mut Tape, bind: &Binding, z: Var) -> Result<Var, TensorError> {
        let logits = self.logits(tape, bind, z)?;
        tape.sigmoid(logits)
    }
}

fn check_sets(legit: &[usize], fraud: &[usize], len: usize, lambda: f64) -> Result<(), LossError> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(LossError::Lambda(lambda));
    }
    let seen: HashSet<usize> = legit.iter().copied().collect();
    if let Some(&i) = fraud.iter().find(|i| seen.contains(i)) {
        return Err(LossError::Overlap(i));
    }
    if let Some(&node) = legit.iter().chain(fraud).find(|&&i| i >= len) {
        return Err(LossError::OutOfRange { node, len });
    }
    Ok(())
}

/// `−λ Σ_legit ln(1 − p) − Σ_fraud ln p` with `p` clamped away from 0 and 1.
pub fn class_balanced_loss(probs: &[f64], legit: &[usize], fraud: &[usize], lambda: f64) -> Result<f64, LossError> {
    check_sets(legit, fraud, probs.len(), lambda)?;
    let clamp = |p: f64| p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let legit_term: f64 = legit.iter().map(|&i| (1.0 - clamp(probs[i])).ln()).sum();
    let fraud_term: f64 = fraud.iter().map(|&i| clamp(probs[i]).ln()).sum();
    Ok(-lambda * legit_term - fraud_term)
}

/// Loss targets over the training nodes of `split`.
pub fn loss_targets(split: &DatasetSplit, num_nodes: usize, lambda: f64) -> Result<Arc<[BceTarget]>, LossError> {
    check_sets(&split.train_legit, &split.train_fraud, num_nodes, lambda)?;
    let legit = split.train_legit.iter().map(|&row| BceTarget {
        row,
        label: 0.0,
        weight: lambda,
    });
    let fraud = split.train_fraud.iter().map(|&row| BceTarget {
        row,
        label: 1.0,
        weight: 1.0,
    });
    Ok(legit.chain(fraud).collect())
}
