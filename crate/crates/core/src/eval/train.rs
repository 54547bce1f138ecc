use ndarray::{concatenate, Array2, Axis};
use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::metrics::Confusion;
use crate::error::{Error, Result};
use crate::gcn::{weighted_bce_loss, AdamState, ClassWeights, GcnModel, GcnParams, LossConfig};
use crate::scalar::{c, Scalar};
use crate::topology::{GraphSnapshot, NormalizedAdjacency};

/// Snapshots per forward pass. Batches are cut into pieces of this size to
/// keep the working set small; results do not depend on it beyond rounding.
const PIECE: usize = 64;

/// A standardized snapshot with its operator built once, tagged with the
/// attack intensity of the scenario it came from.
#[derive(Debug, Clone)]
pub struct PreparedSnapshot<T> {
    pub adjacency: NormalizedAdjacency<T>,
    pub features: Array2<T>,
    pub labels: Vec<bool>,
    pub mask: Vec<bool>,
    pub k: f64,
}

impl<T: Scalar> PreparedSnapshot<T> {
    pub fn new(snapshot: GraphSnapshot<T>, k: f64) -> Result<Self> {
        Ok(Self {
            adjacency: snapshot.adjacency()?,
            labels: snapshot.node_labels(),
            mask: snapshot.iot_mask,
            features: snapshot.features,
            k,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.mask.len()
    }
}

/// Several snapshots merged into one disconnected graph.
#[derive(Debug, Clone)]
pub struct Batch<T> {
    pub adjacency: NormalizedAdjacency<T>,
    pub features: Array2<T>,
    pub labels: Vec<bool>,
    pub mask: Vec<bool>,
}

pub fn make_batch<T: Scalar>(items: &[&PreparedSnapshot<T>]) -> Result<Batch<T>> {
    if items.is_empty() {
        return Err(Error::input("empty batch"));
    }
    let views: Vec<_> = items.iter().map(|s| s.features.view()).collect();
    let features = concatenate(Axis(0), &views).map_err(|e| Error::shape(e.to_string()))?;
    Ok(Batch {
        adjacency: NormalizedAdjacency::block_diagonal(items.iter().map(|s| &s.adjacency)),
        features,
        labels: items.iter().flat_map(|s| s.labels.iter().copied()).collect(),
        mask: items.iter().flat_map(|s| s.mask.iter().copied()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 1024,
            learning_rate: 1e-3,
            threshold: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::param("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch size must be >= 1"));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::param(format!("learning rate must be >= 0, got {}", self.learning_rate)));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::param(format!("threshold must lie in [0, 1], got {}", self.threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Masked-node-weighted mean of the batch losses.
    pub train_loss: f64,
    pub val_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Parameters from the epoch with the best validation F1 (earliest on ties).
    pub model: GcnModel<T>,
    pub optimizer: AdamState<T>,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

/// Masked-node scores with their labels and scenario intensity, in set order.
#[derive(Debug, Clone, Default)]
pub struct ScoredNodes<T> {
    pub scores: Vec<T>,
    pub labels: Vec<bool>,
    pub ks: Vec<f64>,
}

/// Eval-mode scores for every IoT node of every snapshot.
pub fn score_set<T: Scalar>(
    model: &GcnModel<T>,
    set: &[PreparedSnapshot<T>],
    batch_size: usize,
) -> Result<ScoredNodes<T>> {
    let mut out = ScoredNodes::default();
    let refs: Vec<&PreparedSnapshot<T>> = set.iter().collect();
    for chunk in refs.chunks(batch_size.clamp(1, PIECE)) {
        let batch = make_batch(chunk)?;
        let scores = model.predict(&batch.adjacency, batch.features.view())?;
        let mut offset = 0;
        for s in chunk {
            for i in 0..s.num_nodes() {
                if s.mask[i] {
                    out.scores.push(scores[offset + i]);
                    out.labels.push(s.labels[i]);
                    out.ks.push(s.k);
                }
            }
            offset += s.num_nodes();
        }
    }
    Ok(out)
}

fn pooled_f1<T: Scalar>(scored: &ScoredNodes<T>, threshold: T) -> f64 {
    let mut c = Confusion::default();
    for (s, y) in scored.scores.iter().zip(&scored.labels) {
        c.add(*s >= threshold, *y);
    }
    c.f1()
}

/// Class weights balanced over the masked labels of a whole training split.
pub fn split_class_weights<T: Scalar>(set: &[PreparedSnapshot<T>]) -> Result<ClassWeights<T>> {
    let (mut neg, mut pos) = (0usize, 0usize);
    for s in set {
        for (y, m) in s.labels.iter().zip(&s.mask) {
            if *m {
                if *y {
                    pos += 1
                } else {
                    neg += 1
                }
            }
        }
    }
    ClassWeights::from_counts(neg, pos)
}

/// Mini-batch training with per-epoch shuffling and validation-F1 model selection.
pub fn train<T: Scalar>(
    mut model: GcnModel<T>,
    train_set: &[PreparedSnapshot<T>],
    val_set: &[PreparedSnapshot<T>],
    cfg: &TrainConfig,
    rng: &mut dyn RngCore,
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::input("training and validation sets must be non-empty"));
    }
    let class_weights = split_class_weights(train_set)?;
    let threshold: T = c(cfg.threshold);
    let mut optimizer = AdamState::new(&model, cfg.learning_rate);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, GcnModel<T>, AdamState<T>)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(rng);
        let (mut loss_sum, mut weight_sum) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let masked: usize = batch.iter().map(|&i| train_set[i].mask.iter().filter(|m| **m).count()).sum();
            let batch_weight = T::one() / c::<T>(masked as f64);
            let mut grads = GcnParams::zeros(model.f_in(), model.hidden());
            let mut batch_loss = 0.0;
            // The batch graph is a disjoint union, so it is processed in
            // pieces and the gradients of the pieces are summed.
            for piece in batch.chunks(PIECE) {
                let items: Vec<_> = piece.iter().map(|&i| &train_set[i]).collect();
                let part = make_batch(&items)?;
                let part_masked = part.mask.iter().filter(|m| **m).count();
                if part_masked == 0 {
                    continue;
                }
                let cache = model.forward(&part.adjacency, part.features.view(), Some(&mut *rng))?;
                let loss_cfg = LossConfig {
                    class_weights,
                    mask: part.mask,
                };
                let (loss, d_scores) = weighted_bce_loss(&cache.scores, &part.labels, &loss_cfg)?;
                // rescale the piece's mean to its share of the batch mean
                let share = c::<T>(part_masked as f64) * batch_weight;
                let g = model.backward(&cache, &d_scores)?;
                grads.add_scaled(&g, share)?;
                batch_loss += loss.to_f64_lossy() * part_masked as f64;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Numerical(format!("non-finite training loss at epoch {epoch}")));
            }
            optimizer.step(&mut model, &grads)?;
            loss_sum += batch_loss;
            weight_sum += masked;
        }
        let val_f1 = pooled_f1(&score_set(&model, val_set, cfg.batch_size)?, threshold);
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / weight_sum as f64,
            val_f1,
        });
        if best.as_ref().is_none_or(|b| val_f1 > b.0) {
            best = Some((val_f1, epoch, model.clone(), optimizer.clone()));
        }
    }
    let (_, best_epoch, model, optimizer) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        model,
        optimizer,
        best_epoch,
        history,
    })
}

pub fn write_history<W: std::io::Write>(history: &[EpochRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["epoch", "train_loss", "val_f1"])?;
    for r in history {
        wr.write_record([r.epoch.to_string(), r.train_loss.to_string(), r.val_f1.to_string()])?;
    }
    wr.flush().map_err(|e| Error::io("history", e))?;
    Ok(())
}
