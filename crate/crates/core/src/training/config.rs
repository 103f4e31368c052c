use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::evaluation::DEFAULT_THRESHOLD;
use crate::fusion::{FusionConfig, DEFAULT_LAMBDA};
use crate::graph::DEFAULT_TRAIN_FRACTION;
use crate::neighborhood_attention::NeighborhoodConfig;
use crate::relation_attention::DEFAULT_RELATION_HIDDEN;
use crate::tensor::Activation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Full,
    /// Classifies on the local embedding alone.
    V1,
    /// Classifies on the long-range embedding alone.
    V2,
    /// Feeds `[h ‖ f]` to the neighborhood attention.
    F,
}

impl Variant {
    pub const ABLATION: [Variant; 3] = [Variant::V1, Variant::V2, Variant::Full];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "FULL",
            Variant::V1 => "V1",
            Variant::V2 => "V2",
            Variant::F => "F",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "FULL" => Ok(Variant::Full),
            "V1" => Ok(Variant::V1),
            "V2" => Ok(Variant::V2),
            "F" => Ok(Variant::F),
            _ => Err(TrainError::UnknownVariant(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub lambda: f64,
    pub seed: u64,
    pub variant: Variant,
    pub train_fraction: f64,
    pub threshold: f64,
    pub relation_hidden: usize,
    pub neighborhood: NeighborhoodConfig,
    pub fusion: FusionConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 15,
            lr: 5e-3,
            lambda: DEFAULT_LAMBDA,
            seed: 0,
            variant: Variant::Full,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            threshold: DEFAULT_THRESHOLD,
            relation_hidden: DEFAULT_RELATION_HIDDEN,
            neighborhood: NeighborhoodConfig::default(),
            fusion: FusionConfig::default(),
        }
    }
}

/// Keys accepted by [`TrainConfig::set`], in the order `to_kv` writes them.
pub const CONFIG_KEYS: &[&str] = &[
    "epochs",
    "lr",
    "lambda",
    "seed",
    "variant",
    "train_fraction",
    "threshold",
    "relation_hidden",
    "layers",
    "heads",
    "head_dim",
    "faithful_dims",
    "score_activation",
    "aggregation_activation",
    "proj_hidden",
    "embed_dim",
    "fusion_hidden",
    "classifier_hidden",
    "mlp_activation",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, TrainError> {
    value
        .parse()
        .map_err(|_| TrainError::Config(format!("{key}: cannot parse `{value}`")))
}

fn activation(key: &str, value: &str) -> Result<Activation, TrainError> {
    Activation::parse(value).ok_or_else(|| TrainError::Config(format!("{key}: unknown activation `{value}`")))
}

impl TrainConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), TrainError> {
        let nb = &mut self.neighborhood;
        let fu = &mut self.fusion;
        match key {
            "epochs" => self.epochs = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "variant" => self.variant = value.parse()?,
            "train_fraction" => self.train_fraction = parse(key, value)?,
            "threshold" => self.threshold = parse(key, value)?,
            "relation_hidden" => self.relation_hidden = parse(key, value)?,
            "layers" => nb.layers = parse(key, value)?,
            "heads" => nb.heads = parse(key, value)?,
            "head_dim" => nb.head_dim = parse(key, value)?,
            "faithful_dims" => nb.faithful_dims = parse(key, value)?,
            "score_activation" => nb.score_activation = activation(key, value)?,
            "aggregation_activation" => nb.aggregation_activation = activation(key, value)?,
            "proj_hidden" => fu.proj_hidden = parse(key, value)?,
            "embed_dim" => fu.embed_dim = parse(key, value)?,
            "fusion_hidden" => fu.fusion_hidden = parse(key, value)?,
            "classifier_hidden" => fu.classifier_hidden = parse(key, value)?,
            "mlp_activation" => fu.activation = activation(key, value)?,
            _ => return Err(TrainError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// `key=value` assignment.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<(), TrainError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| TrainError::Config(format!("expected key=value, got `{assignment}`")))?;
        self.set(key.trim(), value.trim())
    }

    /// Lines of `key = value`; `#` starts a comment.
    pub fn parse_kv(text: &str) -> Result<Self, TrainError> {
        let mut config = Self::default();
        config.apply_kv(text)?;
        Ok(config)
    }

    pub fn apply_kv(&mut self, text: &str) -> Result<(), TrainError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.apply_assignment(line)
                .map_err(|e| TrainError::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, TrainError> {
        let text = std::fs::read_to_string(path).map_err(|e| TrainError::Io(format!("{}: {e}", path.display())))?;
        Self::parse_kv(&text)
    }

    pub fn to_kv(&self) -> String {
        let nb = &self.neighborhood;
        let fu = &self.fusion;
        let values = [
            self.epochs.to_string(),
            self.lr.to_string(),
            self.lambda.to_string(),
            self.seed.to_string(),
            self.variant.to_string(),
            self.train_fraction.to_string(),
            self.threshold.to_string(),
            self.relation_hidden.to_string(),
            nb.layers.to_string(),
            nb.heads.to_string(),
            nb.head_dim.to_string(),
            nb.faithful_dims.to_string(),
            nb.score_activation.name(),
            nb.aggregation_activation.name(),
            fu.proj_hidden.to_string(),
            fu.embed_dim.to_string(),
            fu.fusion_hidden.to_string(),
            fu.classifier_hidden.to_string(),
            fu.activation.name(),
        ];
        CONFIG_KEYS
            .iter()
            .zip(values)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let positive = [
            ("relation_hidden", self.relation_hidden),
            ("proj_hidden", self.fusion.proj_hidden),
            ("embed_dim", self.fusion.embed_dim),
            ("fusion_hidden", self.fusion.fusion_hidden),
            ("classifier_hidden", self.fusion.classifier_hidden),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(TrainError::Config(format!("{k} must be positive")));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(TrainError::Config(format!("lr = {} must be finite and non-negative", self.lr)));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(TrainError::Config(format!("lambda = {} is outside (0, 1]", self.lambda)));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(TrainError::Config(format!(
                "train_fraction = {} is outside (0, 1)",
                self.train_fraction
            )));
        }
        self.neighborhood.validate()?;
        Ok(())
    }
}
