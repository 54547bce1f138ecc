use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

/// Floor applied to the arguments of both logarithms.
pub const LOG_CLAMP: f64 = 1e-12;

/// Per-class loss weights `w_c = T / (2 T_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights<T> {
    pub negative: T,
    pub positive: T,
}

impl<T: Scalar> ClassWeights<T> {
    pub fn uniform() -> Self {
        Self {
            negative: T::one(),
            positive: T::one(),
        }
    }

    /// Balanced weights from the masked training labels.
    pub fn from_counts(negatives: usize, positives: usize) -> Result<Self> {
        if negatives == 0 || positives == 0 {
            return Err(Error::input(format!(
                "class weights need both classes, got {negatives} negative / {positives} positive labels"
            )));
        }
        let total = (negatives + positives) as f64;
        Ok(Self {
            negative: c(total / (2.0 * negatives as f64)),
            positive: c(total / (2.0 * positives as f64)),
        })
    }
}

/// Loss weights plus the node mask restricting the loss to IoT nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LossConfig<T> {
    pub class_weights: ClassWeights<T>,
    pub mask: Vec<bool>,
}

/// Class-weighted binary cross-entropy averaged over masked nodes, and its
/// gradient with respect to the scores (zero on unmasked nodes).
pub fn weighted_bce_loss<T: Scalar>(
    scores: &Array1<T>,
    labels: &[bool],
    cfg: &LossConfig<T>,
) -> Result<(T, Array1<T>)> {
    if scores.len() != labels.len() || scores.len() != cfg.mask.len() {
        return Err(Error::shape(format!(
            "scores {}, labels {}, mask {}",
            scores.len(),
            labels.len(),
            cfg.mask.len()
        )));
    }
    let m = cfg.mask.iter().filter(|v| **v).count();
    if m == 0 {
        return Err(Error::input("loss mask selects no nodes"));
    }
    let eps: T = c(LOG_CLAMP);
    let inv_m = T::one() / c::<T>(m as f64);
    let w = cfg.class_weights;
    let mut loss = T::zero();
    let mut grad = Array1::zeros(scores.len());
    for i in 0..scores.len() {
        if !cfg.mask[i] {
            continue;
        }
        let s = scores[i];
        if labels[i] {
            let a = s.max(eps);
            loss = loss - w.positive * a.ln();
            grad[i] = -w.positive / a * inv_m;
        } else {
            let a = (T::one() - s).max(eps);
            loss = loss - w.negative * a.ln();
            grad[i] = w.negative / a * inv_m;
        }
    }
    Ok((loss * inv_m, grad))
}
