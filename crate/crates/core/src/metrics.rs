//! Binary classification metrics. The positive class is label `1`.
//!
//! Ratios with a zero denominator evaluate to 0, MCC included.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn merge(&self, other: &ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tp + other.tp,
            tn: self.tn + other.tn,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
        }
    }
}

pub fn confusion(labels: &[u8], predictions: &[u8]) -> Result<ConfusionMatrix> {
    if labels.len() != predictions.len() {
        return Err(Error::Metric(format!(
            "{} labels but {} predictions",
            labels.len(),
            predictions.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (&y, &p) in labels.iter().zip(predictions) {
        match (y, p) {
            (1, 1) => cm.tp += 1,
            (0, 0) => cm.tn += 1,
            (0, 1) => cm.fp += 1,
            (1, 0) => cm.fn_ += 1,
            _ => return Err(Error::Metric(format!("non-binary pair ({y}, {p})"))),
        }
    }
    Ok(cm)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn mcc(cm: &ConfusionMatrix) -> f64 {
    let [tp, tn, fp, fn_] = [cm.tp, cm.tn, cm.fp, cm.fn_].map(|v| v as f64);
    let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    ratio(tp * tn - fp * fn_, den.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

pub fn rates(cm: &ConfusionMatrix) -> Rates {
    let [tp, tn, fp, fn_] = [cm.tp, cm.tn, cm.fp, cm.fn_].map(|v| v as f64);
    let sensitivity = ratio(tp, tp + fn_);
    let specificity = ratio(tn, tn + fp);
    Rates {
        accuracy: ratio(tp + tn, tp + tn + fp + fn_),
        balanced_accuracy: (sensitivity + specificity) / 2.0,
        sensitivity,
        specificity,
    }
}

fn check_scores(labels: &[u8], scores: &[f64]) -> Result<(usize, usize)> {
    if labels.len() != scores.len() {
        return Err(Error::Metric(format!("{} labels but {} scores", labels.len(), scores.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.iter().filter(|&&y| y == 0).count();
    if pos + neg != labels.len() {
        return Err(Error::Metric("labels must be 0 or 1".into()));
    }
    if pos == 0 || neg == 0 {
        return Err(Error::Metric("both classes must be present".into()));
    }
    Ok((pos, neg))
}

/// Mann–Whitney U over average ranks: tied positive/negative pairs count 1/2.
pub fn auc_roc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    let (pos, neg) = check_scores(labels, scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their mean.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += avg * order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos * neg) as f64)
}

/// Step-wise average precision: `Σ (R_k − R_{k−1}) · P_k` over descending
/// distinct score thresholds.
pub fn pr_auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    let (pos, _) = check_scores(labels, scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub mcc: f64,
    pub auc_roc: f64,
    pub pr_auc: f64,
}

impl MetricSet {
    /// Thresholds `probabilities` at `threshold` (inclusive) for the rates.
    pub fn evaluate(labels: &[u8], probabilities: &[f64], threshold: f64) -> Result<(MetricSet, ConfusionMatrix)> {
        let predictions: Vec<u8> = probabilities.iter().map(|&p| u8::from(p >= threshold)).collect();
        let cm = confusion(labels, &predictions)?;
        let r = rates(&cm);
        Ok((
            MetricSet {
                accuracy: r.accuracy,
                balanced_accuracy: r.balanced_accuracy,
                sensitivity: r.sensitivity,
                specificity: r.specificity,
                mcc: mcc(&cm),
                auc_roc: auc_roc(labels, probabilities)?,
                pr_auc: pr_auc(labels, probabilities)?,
            },
            cm,
        ))
    }

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.accuracy,
            self.balanced_accuracy,
            self.sensitivity,
            self.specificity,
            self.mcc,
            self.auc_roc,
            self.pr_auc,
        ]
    }

    pub fn from_array(v: [f64; 7]) -> Self {
        MetricSet {
            accuracy: v[0],
            balanced_accuracy: v[1],
            sensitivity: v[2],
            specificity: v[3],
            mcc: v[4],
            auc_roc: v[5],
            pr_auc: v[6],
        }
    }

    /// Componentwise arithmetic mean.
    pub fn mean(sets: &[MetricSet]) -> Option<MetricSet> {
        if sets.is_empty() {
            return None;
        }
        let mut acc = [0.0; 7];
        for s in sets {
            for (a, v) in acc.iter_mut().zip(s.to_array()) {
                *a += v;
            }
        }
        Some(MetricSet::from_array(acc.map(|a| a / sets.len() as f64)))
    }
}
