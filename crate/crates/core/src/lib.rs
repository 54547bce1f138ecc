//! Synthetic IoT DDoS traffic, temporal graph construction over node groups
//! and a from-scratch graph convolutional detector.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below name the `f64` instantiations used by the experiment driver.

pub mod config;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod gcn;
pub mod manifest;
pub mod scalar;
pub mod topology;
pub mod traffic;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Model = gcn::GcnModel<f64>;
pub type ModelF32 = gcn::GcnModel<f32>;
pub type Adjacency = topology::NormalizedAdjacency<f64>;
pub type Snapshot = topology::GraphSnapshot<f64>;
pub type Prepared = eval::PreparedSnapshot<f64>;
