use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{GraphError, Label};
use crate::seed::rng_for;

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.4;

/// Stratified train/test partition of the labeled nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    /// Labeled legit nodes in the training set.
    pub train_legit: Vec<usize>,
    /// Labeled fraud nodes in the training set.
    pub train_fraud: Vec<usize>,
    pub test_legit: Vec<usize>,
    pub test_fraud: Vec<usize>,
}

impl DatasetSplit {
    pub fn train(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.train_legit.iter().chain(&self.train_fraud).copied().collect();
        v.sort_unstable();
        v
    }

    pub fn test(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.test_legit.iter().chain(&self.test_fraud).copied().collect();
        v.sort_unstable();
        v
    }

    /// SHA-256 over the four sorted index lists; identical splits hash equal.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for (tag, part) in [
            ("train_legit", &self.train_legit),
            ("train_fraud", &self.train_fraud),
            ("test_legit", &self.test_legit),
            ("test_fraud", &self.test_fraud),
        ] {
            hasher.update(tag.as_bytes());
            for i in part {
                hasher.update((*i as u64).to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }
}

/// Per class, shuffles the labeled nodes with the `split` stream of `seed`
/// and keeps `round(train_fraction · count)` (at least one) for training.
pub fn split_nodes(
    labels: &[Option<Label>],
    train_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit, GraphError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(GraphError::Split(format!(
            "train_fraction {train_fraction} is outside (0, 1)"
        )));
    }
    let mut rng = rng_for(seed, "split");
    let mut parts = Vec::with_capacity(2);
    for class in [Label::Legit, Label::Fraud] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Some(class)).collect();
        if members.is_empty() {
            return Err(GraphError::Split(format!("no labeled {class:?} nodes")));
        }
        members.shuffle(&mut rng);
        let take = ((train_fraction * members.len() as f64).round() as usize).clamp(1, members.len());
        let mut train = members[..take].to_vec();
        let mut test = members[take..].to_vec();
        train.sort_unstable();
        test.sort_unstable();
        parts.push((train, test));
    }
    let (fraud, legit) = (parts.pop().unwrap(), parts.pop().unwrap());
    Ok(DatasetSplit {
        train_legit: legit.0,
        train_fraud: fraud.0,
        test_legit: legit.1,
        test_fraud: fraud.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stratified_half_split() {
        let mut labels = vec![Some(Label::Legit); 10];
        labels[3] = Some(Label::Fraud);
        labels[7] = Some(Label::Fraud);
        let split = split_nodes(&labels, 0.5, 1).unwrap();
        assert_eq!(split.train_fraud.len(), 1);
        assert_eq!(split.train_legit.len(), 4);
        let mut all = split.train();
        all.extend(split.test());
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn unlabeled_nodes_are_left_out() {
        let labels = vec![Some(Label::Fraud), None, Some(Label::Legit), Some(Label::Legit), None];
        let split = split_nodes(&labels, 0.5, 2).unwrap();
        assert!(!split.train().contains(&1) && !split.test().contains(&1));
        assert!(!split.train().contains(&4) && !split.test().contains(&4));
    }

    #[test]
    fn missing_class_or_fraction_is_rejected() {
        let labels = vec![Some(Label::Legit); 4];
        assert!(split_nodes(&labels, 0.5, 1).is_err());
        let labels = vec![Some(Label::Legit), Some(Label::Fraud)];
        assert!(split_nodes(&labels, 1.0, 1).is_err());
        assert!(split_nodes(&labels, 0.0, 1).is_err());
    }

    #[test]
    fn digest_tracks_membership() {
        let labels: Vec<_> = (0..20).map(|i| Some(if i % 4 == 0 { Label::Fraud } else { Label::Legit })).collect();
        let a = split_nodes(&labels, 0.4, 5).unwrap();
        assert_eq!(a.digest(), split_nodes(&labels, 0.4, 5).unwrap().digest());
        assert_ne!(a.digest(), split_nodes(&labels, 0.4, 6).unwrap().digest());
    }
}
