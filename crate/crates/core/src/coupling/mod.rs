//! Invertible coordinate maps: additive (volume-preserving) and affine
//! coupling networks, plus the autoencoder used when `θ` reduces dimension.
//!
//! A coupling of partition `dp` splits `x` into `x₁ = x[..dp]` and
//! `x₂ = x[dp..]`; `up` modules update `x₁`, `low` modules update `x₂`.

mod autoencoder;
mod flows;
mod fnn;

pub use autoencoder::AutoencoderPair;
pub use flows::{
    CouplingKind, CouplingModule, CouplingTrace, InverseView, InvertibleNet, NvpCoupling, SubnetSpec, VpCoupling,
    SCALE_CLAMP,
};
pub use fnn::{Fnn, FnnTrace};
