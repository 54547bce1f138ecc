//! From-scratch two-layer GCN: forward pass, class-weighted masked BCE,
//! analytic backward pass, adaptive-moment optimizer and checkpoints.

mod adam;
mod checkpoint;
mod loss;
mod model;
mod params;

pub use adam::AdamState;
pub use checkpoint::{Checkpoint, MAGIC, VERSION};
pub use loss::{weighted_bce_loss, ClassWeights, LossConfig, LOG_CLAMP};
pub use model::{ForwardCache, GcnModel};
pub use params::GcnParams;
