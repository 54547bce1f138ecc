use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Confusion counts with "attacking" as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Confusion {
    pub fn from_predictions(predicted: &[bool], labels: &[bool]) -> Self {
        let mut c = Self::default();
        for (&p, &y) in predicted.iter().zip(labels) {
            c.add(p, y);
        }
        c
    }

    #[inline]
    pub fn add(&mut self, predicted: bool, label: bool) {
        match (predicted, label) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall; 0 when both are 0.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

/// Area under the ROC curve through the rank statistic: tied scores share
/// their average rank, which matches the trapezoidal ROC over all thresholds.
pub fn roc_auc<T: Scalar>(scores: &[T], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::shape(format!("{} scores vs {} labels", scores.len(), labels.len())));
    }
    let pos = labels.iter().filter(|l| **l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::input("AUC needs both positive and negative labels"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            if labels[o] {
                rank_sum += avg;
            }
        }
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// The reported metric suite for one pooled slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub binary_accuracy: f64,
    pub f1: f64,
    pub auc: f64,
    pub recall: f64,
}

impl BinaryMetrics {
    pub const NAMES: [&'static str; 4] = ["binary_accuracy", "f1", "auc", "recall"];

    pub fn values(&self) -> [f64; 4] {
        [self.binary_accuracy, self.f1, self.auc, self.recall]
    }

    pub fn from_values(v: [f64; 4]) -> Self {
        Self {
            binary_accuracy: v[0],
            f1: v[1],
            auc: v[2],
            recall: v[3],
        }
    }

    /// Thresholded metrics plus AUC. A slice with a single class gets AUC 0.5.
    pub fn compute<T: Scalar>(scores: &[T], labels: &[bool], threshold: T) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::input("no samples to score"));
        }
        let mut c = Confusion::default();
        for (s, y) in scores.iter().zip(labels) {
            c.add(*s >= threshold, *y);
        }
        let auc = match roc_auc(scores, labels) {
            Ok(a) => a,
            Err(Error::InvalidInput(_)) => 0.5,
            Err(e) => return Err(e),
        };
        Ok(Self {
            binary_accuracy: c.accuracy(),
            f1: c.f1(),
            auc,
            recall: c.recall(),
        })
    }
}
