use std::collections::BTreeMap;

use super::metrics::BinaryMetrics;
use super::train::{score_set, PreparedSnapshot, ScoredNodes};
use crate::error::{Error, Result};
use crate::gcn::GcnModel;
use crate::scalar::{c, Scalar};

/// Metrics for one attack intensity, pooled over every IoT node and slot of
/// the test scenarios with that intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMetrics {
    pub k: f64,
    pub metrics: BinaryMetrics,
    pub samples: usize,
}

pub fn metrics_by_k<T: Scalar>(scored: &ScoredNodes<T>, threshold: f64) -> Result<Vec<KMetrics>> {
    let mut slices: BTreeMap<u64, (Vec<T>, Vec<bool>)> = BTreeMap::new();
    for ((s, y), k) in scored.scores.iter().zip(&scored.labels).zip(&scored.ks) {
        let e = slices.entry(k.to_bits()).or_default();
        e.0.push(*s);
        e.1.push(*y);
    }
    let thr: T = c(threshold);
    let mut out = Vec::with_capacity(slices.len());
    for (bits, (scores, labels)) in slices {
        let k = f64::from_bits(bits);
        if k > 0.0 && !labels.iter().any(|y| *y) {
            return Err(Error::input(format!("test slice k = {k} contains no attacking samples")));
        }
        out.push(KMetrics {
            k,
            metrics: BinaryMetrics::compute(&scores, &labels, thr)?,
            samples: scores.len(),
        });
    }
    out.sort_by(|a, b| a.k.total_cmp(&b.k));
    Ok(out)
}

pub fn evaluate<T: Scalar>(
    model: &GcnModel<T>,
    test_set: &[PreparedSnapshot<T>],
    threshold: f64,
    batch_size: usize,
) -> Result<Vec<KMetrics>> {
    if test_set.is_empty() {
        return Err(Error::input("empty test set"));
    }
    metrics_by_k(&score_set(model, test_set, batch_size)?, threshold)
}
