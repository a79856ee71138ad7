//! The PNN `θ⁻¹ ∘ Φ ∘ θ`: datasets of snapshot pairs, both training
//! losses, encode-once multi-step prediction and checkpoints.

mod dataset;
mod flow;
mod model;
mod spec;

pub use dataset::FlowDataset;
pub use flow::{Checkpoint, Dims, FlowModel, ModelKind};
pub use model::{LossKind, PnnModel, Transform};
pub use spec::{ModelSpec, PhiSpec, ThetaSpec};
