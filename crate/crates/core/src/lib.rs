//! Poisson neural networks.
//!
//! A PNN learns the time-`h` flow of a Poisson system (or a single trajectory
//! of an autonomous system) as `θ⁻¹ ∘ Φ ∘ θ`: an invertible coordinate map
//! `θ`, an extended symplectic network `Φ` acting on a `2d`-dimensional
//! latent block, and the inverse of `θ`.
//!
//! * [`numcore`]: arrays, activations, parameters, gradient oracles.
//! * [`sympnet`]: linear, activation, gradient and extended symplectic modules.
//! * [`coupling`]: additive / affine coupling networks and autoencoders.
//! * [`pnn`]: the composed model, its two losses and multi-step prediction.
//! * [`systems`]: benchmark systems, bracket checks, data generation, rendering.
//! * [`train`]: Adam, the training loop and evaluation metrics.

pub mod coupling;
pub mod error;
pub mod numcore;
pub mod pnn;
mod serial;
pub mod sympnet;
pub mod systems;
pub mod train;

pub use error::{Error, Result};
pub use numcore::RealArray;
