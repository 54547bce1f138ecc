use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The four parameter blocks of the two-layer network. Also used for
/// gradients and optimizer moments, which share the same shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams<T> {
    /// `F_in x H`
    pub w0: Array2<T>,
    /// `H`
    pub b0: Array1<T>,
    /// `H x 1`
    pub w1: Array2<T>,
    pub b1: T,
}

impl<T: Scalar> GcnParams<T> {
    pub fn zeros(f_in: usize, hidden: usize) -> Self {
        Self {
            w0: Array2::zeros((f_in, hidden)),
            b0: Array1::zeros(hidden),
            w1: Array2::zeros((hidden, 1)),
            b1: T::zero(),
        }
    }

    pub fn f_in(&self) -> usize {
        self.w0.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w0.ncols()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.w0.dim() == other.w0.dim() && self.b0.dim() == other.b0.dim() && self.w1.dim() == other.w1.dim()
    }

    /// Blocks flattened in `w0, b0, w1, b1` order.
    pub fn blocks(&self) -> [&[T]; 4] {
        [
            self.w0.as_slice().expect("standard layout"),
            self.b0.as_slice().expect("standard layout"),
            self.w1.as_slice().expect("standard layout"),
            std::slice::from_ref(&self.b1),
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut [T]; 4] {
        [
            self.w0.as_slice_mut().expect("standard layout"),
            self.b0.as_slice_mut().expect("standard layout"),
            self.w1.as_slice_mut().expect("standard layout"),
            std::slice::from_mut(&mut self.b1),
        ]
    }

    pub fn all_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    pub fn num_values(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, other: &Self, alpha: T) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::shape("parameter sets differ in shape"));
        }
        for (dst, src) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += alpha * *s;
            }
        }
        Ok(())
    }

    pub fn scaled(&self, by: T) -> Self {
        Self {
            w0: self.w0.mapv(|v| v * by),
            b0: self.b0.mapv(|v| v * by),
            w1: self.w1.mapv(|v| v * by),
            b1: self.b1 * by,
        }
    }
}
