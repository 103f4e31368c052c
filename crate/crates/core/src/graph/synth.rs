//! Labeled multi-relation graphs with tunable relation and feature camouflage.
//!
//! Each relation is an assortative block model: same-class pairs connect with
//! the relation's probability, cross-class pairs never do. A `camouflage_rate`
//! fraction of fraud–fraud edges then has one endpoint swapped for a random
//! legitimate node. Legit features are standard Gaussian; fraud features are
//! shifted by `feature_shift` in every dimension, except a
//! `feature_camouflage_rate` fraction of fraudsters drawn from the legit
//! distribution.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{GraphError, Label, MultiRelationGraph, RelationEdgeList};
use crate::seed::rng_for;
use crate::tensor::Matrix;

pub const SYNTH_META_FILE: &str = "synth_meta.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_nodes: usize,
    pub fraud_fraction: f64,
    pub num_relations: usize,
    /// Intra-class edge probability per relation.
    pub edge_probs: Vec<f64>,
    pub camouflage_rate: f64,
    pub feature_dim: usize,
    pub feature_camouflage_rate: f64,
    pub feature_shift: f64,
    /// Scales the legit–legit probability by `(n_fraud − 1)/(n_legit − 1)` so
    /// both classes have the same expected intra-class degree.
    #[serde(default)]
    pub balance_degrees: bool,
    pub seed: u64,
}

impl SynthConfig {
    pub const DEFAULT_EDGE_PROBS: [f64; 3] = [0.02, 0.01, 0.005];

    /// Benchmark graph: 1,000 nodes, 3 relations, 10% fraud, camouflage 0.3/0.3,
    /// degree-balanced classes.
    pub fn benchmark(seed: u64) -> Self {
        Self {
            num_nodes: 1000,
            fraud_fraction: 0.1,
            num_relations: 3,
            edge_probs: Self::DEFAULT_EDGE_PROBS.to_vec(),
            camouflage_rate: 0.3,
            feature_dim: 16,
            feature_camouflage_rate: 0.3,
            feature_shift: 1.0,
            balance_degrees: true,
            seed,
        }
    }

    /// Default probability list for `num_relations` relations.
    pub fn default_edge_probs(num_relations: usize) -> Vec<f64> {
        (0..num_relations)
            .map(|r| Self::DEFAULT_EDGE_PROBS[r % Self::DEFAULT_EDGE_PROBS.len()])
            .collect()
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(GraphError::Config(format!("{name} = {v} is outside [0, 1]")))
            }
        };
        if self.num_nodes < 4 {
            return Err(GraphError::Config(format!("num_nodes = {} is below 4", self.num_nodes)));
        }
        if !(self.fraud_fraction > 0.0 && self.fraud_fraction < 1.0) {
            return Err(GraphError::Config(format!(
                "fraud_fraction = {} is outside (0, 1)",
                self.fraud_fraction
            )));
        }
        if self.num_relations == 0 {
            return Err(GraphError::Config("num_relations must be at least 1".into()));
        }
        if self.edge_probs.len() != self.num_relations {
            return Err(GraphError::Config(format!(
                "{} edge probabilities for {} relations",
                self.edge_probs.len(),
                self.num_relations
            )));
        }
        for (r, &p) in self.edge_probs.iter().enumerate() {
            unit(&format!("edge_probs[{r}]"), p)?;
        }
        unit("camouflage_rate", self.camouflage_rate)?;
        unit("feature_camouflage_rate", self.feature_camouflage_rate)?;
        if self.feature_dim == 0 {
            return Err(GraphError::Config("feature_dim must be at least 1".into()));
        }
        if !self.feature_shift.is_finite() {
            return Err(GraphError::Config("feature_shift must be finite".into()));
        }
        Ok(())
    }
}

/// G(n, p) pairs over `members` by geometric skipping.
fn sample_block(members: &[usize], p: f64, rng: &mut ChaCha8Rng, out: &mut Vec<(usize, usize)>) {
    let n = members.len();
    if n < 2 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        for a in 0..n {
            for b in a + 1..n {
                out.push((members[a], members[b]));
            }
        }
        return;
    }
    let log_q = (1.0 - p).ln();
    let (mut v, mut w) = (1usize, -1i64);
    while v < n {
        let u: f64 = rng.random();
        w += 1 + ((1.0 - u).ln() / log_q).floor() as i64;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            out.push((members[w as usize], members[v]));
        }
    }
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<(MultiRelationGraph, SynthConfig), GraphError> {
    config.validate()?;
    let n = config.num_nodes;
    let mut rng = rng_for(config.seed, "synth:labels");
    let num_fraud = ((config.fraud_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut labels = vec![Some(Label::Legit); n];
    for &i in &order[..num_fraud] {
        labels[i] = Some(Label::Fraud);
    }
    let fraud: Vec<usize> = (0..n).filter(|&i| labels[i] == Some(Label::Fraud)).collect();
    let legit: Vec<usize> = (0..n).filter(|&i| labels[i] == Some(Label::Legit)).collect();

    let mut frng = rng_for(config.seed, "synth:features");
    let camouflaged = (config.feature_camouflage_rate * fraud.len() as f64).round() as usize;
    let mut disguised = fraud.clone();
    disguised.shuffle(&mut frng);
    let mut shifted = vec![false; n];
    for &i in &disguised[camouflaged..] {
        shifted[i] = true;
    }
    let d = config.feature_dim;
    let mut features = Matrix::zeros(n, d);
    for (i, &shift) in shifted.iter().enumerate() {
        let offset = if shift { config.feature_shift } else { 0.0 };
        for v in features.row_mut(i) {
            let z: f64 = StandardNormal.sample(&mut frng);
            *v = z + offset;
        }
    }

    let mut lists = Vec::with_capacity(config.num_relations);
    for (r, &p) in config.edge_probs.iter().enumerate() {
        let mut erng = rng_for(config.seed, &format!("synth:edges:{r}"));
        let mut fraud_pairs = Vec::new();
        let mut pairs = Vec::new();
        sample_block(&fraud, p, &mut erng, &mut fraud_pairs);
        let p_legit = if config.balance_degrees {
            p * (fraud.len() as f64 - 1.0) / (legit.len() as f64 - 1.0)
        } else {
            p
        };
        sample_block(&legit, p_legit, &mut erng, &mut pairs);
        let mut crng = rng_for(config.seed, &format!("synth:camouflage:{r}"));
        for (a, b) in fraud_pairs {
            if crng.random::<f64>() < config.camouflage_rate {
                let keep = if crng.random::<bool>() { a } else { b };
                let target = legit[crng.random_range(0..legit.len())];
                pairs.push((keep, target));
            } else {
                pairs.push((a, b));
            }
        }
        lists.push(RelationEdgeList::from_pairs(r, pairs).0);
    }
    let names = (1..=config.num_relations).map(|r| format!("r{r}")).collect();
    let graph = MultiRelationGraph::assemble(features, labels, &lists, names)?;
    Ok((graph, config.clone()))
}
