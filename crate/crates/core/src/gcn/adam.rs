//! Adaptive-moment optimizer with bias correction.

use super::model::GcnModel;
use super::params::GcnParams;
use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub first_moment: GcnParams<T>,
    pub second_moment: GcnParams<T>,
}

impl<T: Scalar> AdamState<T> {
    /// Defaults: decays `(0.9, 0.999)`, epsilon `1e-8`.
    pub fn new(model: &GcnModel<T>, learning_rate: f64) -> Self {
        Self::with_hyperparameters(model, learning_rate, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyperparameters(model: &GcnModel<T>, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let zeros = GcnParams::zeros(model.f_in(), model.hidden());
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
        }
    }

    /// Applies one update to `model` in place.
    pub fn step(&mut self, model: &mut GcnModel<T>, grads: &GcnParams<T>) -> Result<()> {
        if !grads.same_shape(&model.params) || !self.first_moment.same_shape(&model.params) {
            return Err(Error::shape("gradient / optimizer state shape does not match the model"));
        }
        if !grads.all_finite() {
            return Err(Error::Numerical("non-finite gradient".into()));
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (self.beta1, self.beta2);
        let correct1: T = c(1.0 / (1.0 - b1.powi(t)));
        let correct2: T = c(1.0 / (1.0 - b2.powi(t)));
        let (b1, b2): (T, T) = (c(b1), c(b2));
        let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
        let lr: T = c(self.learning_rate);
        let eps: T = c(self.epsilon);

        let params = model.params.blocks_mut();
        let m = self.first_moment.blocks_mut();
        let v = self.second_moment.blocks_mut();
        let g = grads.blocks();
        for (((p, m), v), g) in params.into_iter().zip(m).zip(v).zip(g) {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + one_b1 * g[i];
                v[i] = b2 * v[i] + one_b2 * g[i] * g[i];
                let m_hat = m[i] * correct1;
                let v_hat = v[i] * correct2;
                p[i] = p[i] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
