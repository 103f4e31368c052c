use serde::{Deserialize, Serialize};

use super::MetricError;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// AUC and fraud recall with the confusion counts behind them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub auc: f64,
    pub recall: f64,
    pub threshold: f64,
    pub tp: usize,
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

impl MetricReport {
    /// `labels[i]` is true for fraud.
    pub fn compute(scores: &[f64], labels: &[bool], threshold: f64) -> Result<Self, MetricError> {
        let auc = auc(scores, labels)?;
        let (tp, fn_, fp, tn) = confusion(scores, labels, threshold)?;
        Ok(Self {
            auc,
            recall: tp as f64 / (tp + fn_) as f64,
            threshold,
            tp,
            fn_,
            fp,
            tn,
        })
    }

    /// Report over the nodes `legit ∪ fraud` of a probability vector.
    pub fn for_nodes(probs: &[f64], legit: &[usize], fraud: &[usize], threshold: f64) -> Result<Self, MetricError> {
        let (scores, labels) = gather(probs, legit, fraud)?;
        Self::compute(&scores, &labels, threshold)
    }
}

pub(crate) fn gather(probs: &[f64], legit: &[usize], fraud: &[usize]) -> Result<(Vec<f64>, Vec<bool>), MetricError> {
    let mut scores = Vec::with_capacity(legit.len() + fraud.len());
    let mut labels = Vec::with_capacity(scores.capacity());
    for (&i, is_fraud) in legit.iter().map(|i| (i, false)).chain(fraud.iter().map(|i| (i, true))) {
        let &p = probs.get(i).ok_or(MetricError::LengthMismatch(probs.len(), i + 1))?;
        scores.push(p);
        labels.push(is_fraud);
    }
    Ok((scores, labels))
}

fn confusion(scores: &[f64], labels: &[bool], threshold: f64) -> Result<(usize, usize, usize, usize), MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch(scores.len(), labels.len()));
    }
    let (mut tp, mut fn_, mut fp, mut tn) = (0, 0, 0, 0);
    for (&s, &y) in scores.iter().zip(labels) {
        match (y, s >= threshold) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    if tp + fn_ == 0 {
        return Err(MetricError::NoPositives);
    }
    Ok((tp, fn_, fp, tn))
}

/// Probability that a random positive outranks a random negative, ties
/// counting one half (rank-sum form with midranks).
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch(scores.len(), labels.len()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(MetricError::NanScore);
    }
    let pos = labels.iter().filter(|&&y| y).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricError::DegenerateClass { pos, neg });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the positive rank sum keeps midranks integral.
    let mut rank_sum2: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let mid2 = (start + 1 + end) as u128;
        let ties_pos = order[start..end].iter().filter(|&&k| labels[k]).count() as u128;
        rank_sum2 += mid2 * ties_pos;
        start = end;
    }
    let (p, n) = (pos as u128, neg as u128);
    let u2 = rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * n) as f64)
}

/// `TP / (TP + FN)` at `score ≥ threshold`.
pub fn recall(scores: &[f64], labels: &[bool], threshold: f64) -> Result<f64, MetricError> {
    let (tp, fn_, _, _) = confusion(scores, labels, threshold)?;
    Ok(tp as f64 / (tp + fn_) as f64)
}
