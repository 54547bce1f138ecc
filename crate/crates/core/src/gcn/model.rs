//! Two-layer graph convolutional network.
//!
//! ```text
//! H1     = ReLU(Â X W0 + b0)        dropout on H1 in training mode
//! scores = sigmoid(Â H1 W1 + b1)
//! ```
//!
//! Dropout is inverted: survivors are scaled by `1 / (1 - p)` so inference
//! runs without any correction.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, RngCore};

use super::params::GcnParams;
use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};
use crate::topology::NormalizedAdjacency;

#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel<T> {
    pub params: GcnParams<T>,
    pub dropout_rate: f64,
}

/// Everything `backward` needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<'a, T> {
    pub adjacency: &'a NormalizedAdjacency<T>,
    /// `Â X`
    pub propagated_input: Array2<T>,
    /// `Â X W0 + b0`
    pub hidden_pre: Array2<T>,
    /// Per-unit dropout multipliers (`0` or `1 / (1 - p)`); `None` in eval mode.
    pub dropout_mask: Option<Array2<T>>,
    /// Hidden activations after ReLU and dropout.
    pub hidden: Array2<T>,
    /// `Â H1 W1 + b1`
    pub output_pre: Array1<T>,
    pub scores: Array1<T>,
}

#[inline]
pub(crate) fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> GcnModel<T> {
    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn init<R: Rng + ?Sized>(f_in: usize, hidden: usize, dropout_rate: f64, rng: &mut R) -> Result<Self> {
        if f_in == 0 || hidden == 0 {
            return Err(Error::param(format!("layer sizes must be >= 1, got F_in={f_in} H={hidden}")));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::param(format!("dropout rate must be in [0, 1), got {dropout_rate}")));
        }
        let mut params = GcnParams::zeros(f_in, hidden);
        let l0 = (6.0 / (f_in + hidden) as f64).sqrt();
        params.w0.mapv_inplace(|_| c(rng.random_range(-l0..l0)));
        let l1 = (6.0 / (hidden + 1) as f64).sqrt();
        params.w1.mapv_inplace(|_| c(rng.random_range(-l1..l1)));
        Ok(Self { params, dropout_rate })
    }

    pub fn f_in(&self) -> usize {
        self.params.f_in()
    }

    pub fn hidden(&self) -> usize {
        self.params.hidden()
    }

    /// Samples a dropout multiplier matrix for `rows` nodes.
    pub fn sample_dropout_mask<R: Rng + ?Sized>(&self, rows: usize, rng: &mut R) -> Array2<T> {
        let keep = c::<T>(1.0 / (1.0 - self.dropout_rate));
        // drop when a uniform u32 falls below p * 2^32
        let cut = (self.dropout_rate * 4294967296.0) as u64;
        Array2::from_shape_simple_fn((rows, self.hidden()), || {
            if (rng.next_u32() as u64) < cut {
                T::zero()
            } else {
                keep
            }
        })
    }

    /// Forward pass. With `train_rng` the pass runs in training mode and draws a
    /// fresh dropout mask; without it no dropout or scaling is applied.
    pub fn forward<'a>(
        &self,
        adjacency: &'a NormalizedAdjacency<T>,
        x: ArrayView2<'_, T>,
        train_rng: Option<&mut dyn RngCore>,
    ) -> Result<ForwardCache<'a, T>> {
        let mask = match train_rng {
            Some(rng) if self.dropout_rate > 0.0 => Some(self.sample_dropout_mask(x.nrows(), rng)),
            _ => None,
        };
        self.forward_with_mask(adjacency, x, mask)
    }

    /// Forward pass with an explicit dropout multiplier matrix (`None` = eval).
    pub fn forward_with_mask<'a>(
        &self,
        adjacency: &'a NormalizedAdjacency<T>,
        x: ArrayView2<'_, T>,
        dropout_mask: Option<Array2<T>>,
    ) -> Result<ForwardCache<'a, T>> {
        let n = adjacency.num_nodes();
        if x.nrows() != n {
            return Err(Error::shape(format!("adjacency has {n} nodes, features {} rows", x.nrows())));
        }
        if x.ncols() != self.f_in() {
            return Err(Error::shape(format!(
                "model expects {} input features, got {}",
                self.f_in(),
                x.ncols()
            )));
        }
        if let Some(m) = &dropout_mask {
            if m.dim() != (n, self.hidden()) {
                return Err(Error::shape(format!("dropout mask {:?} for hidden {:?}", m.dim(), (n, self.hidden()))));
            }
        }
        let p = &self.params;
        let propagated_input = adjacency.propagate(x)?;
        let mut hidden_pre = propagated_input.dot(&p.w0);
        hidden_pre += &p.b0;
        let hidden = match &dropout_mask {
            Some(m) => {
                let mut h = Array2::zeros(hidden_pre.raw_dim());
                Zip::from(&mut h).and(&hidden_pre).and(m).for_each(|h, &z, &k| {
                    if z > T::zero() {
                        *h = z * k;
                    }
                });
                h
            }
            None => hidden_pre.mapv(|v| v.max(T::zero())),
        };
        let projected = hidden.dot(&p.w1);
        let output_pre = adjacency.propagate(projected.view())?.column(0).mapv(|v| v + p.b1);
        let scores = output_pre.mapv(sigmoid);
        Ok(ForwardCache {
            adjacency,
            propagated_input,
            hidden_pre,
            dropout_mask,
            hidden,
            output_pre,
            scores,
        })
    }

    /// Eval-mode scores.
    pub fn predict(&self, adjacency: &NormalizedAdjacency<T>, x: ArrayView2<'_, T>) -> Result<Array1<T>> {
        Ok(self.forward_with_mask(adjacency, x, None)?.scores)
    }

    /// Exact gradients of the forward composition given `dLoss/dScores`.
    pub fn backward(&self, cache: &ForwardCache<'_, T>, d_scores: &Array1<T>) -> Result<GcnParams<T>> {
        let n = cache.scores.len();
        if d_scores.len() != n {
            return Err(Error::shape(format!("upstream gradient has {} entries, cache {n}", d_scores.len())));
        }
        if cache.hidden.ncols() != self.hidden() || cache.propagated_input.ncols() != self.f_in() {
            return Err(Error::shape("forward cache does not match this model"));
        }
        let p = &self.params;
        let d_out_pre: Array1<T> = d_scores
            .iter()
            .zip(cache.scores.iter())
            .map(|(&g, &s)| g * s * (T::one() - s))
            .collect();
        let b1 = d_out_pre.sum();
        let d_out_col = d_out_pre.insert_axis(Axis(1));
        let d_projected = cache.adjacency.propagate_transpose(d_out_col.view())?;
        let w1 = cache.hidden.t().dot(&d_projected);
        // dH = (dP W1ᵀ) ⊙ mask ⊙ [H_pre > 0], fused into one pass
        let mut d_hidden = Array2::<T>::zeros(cache.hidden_pre.raw_dim());
        let w1_row = p.w1.t();
        let z = Zip::from(&mut d_hidden)
            .and(&cache.hidden_pre)
            .and_broadcast(&d_projected)
            .and_broadcast(&w1_row);
        match &cache.dropout_mask {
            Some(m) => z.and(m).for_each(|g, &pre, &dp, &w, &k| {
                if pre > T::zero() {
                    *g = dp * w * k;
                }
            }),
            None => z.for_each(|g, &pre, &dp, &w| {
                if pre > T::zero() {
                    *g = dp * w;
                }
            }),
        }
        let b0 = d_hidden.sum_axis(Axis(0));
        let w0 = cache.propagated_input.t().dot(&d_hidden);
        // products of transposed views may come back column-major
        Ok(GcnParams {
            w0: w0.as_standard_layout().into_owned(),
            b0,
            w1: w1.as_standard_layout().into_owned(),
            b1,
        })
    }
}
