//! Dense arrays, activations, parameters, seeded randomness and the
//! finite-difference oracles used to check every analytic gradient.

mod activation;
mod array;
mod layer;
mod param;
mod rng;

pub use activation::{sigmoid, sigmoid_scalar, Activation};
pub use array::{gemm, pairwise_sum, RealArray};
pub use layer::{
    central_diff_grad, finite_diff_vjp, flat_grads, flat_params, jacobian_fd, jacobian_fd5, layer_jacobian,
    param_count, randomize_params, relative_error, set_flat_params, DifferentiableLayer, VjpEstimate,
};
pub use param::{Param, ParamSet};
pub use rng::{seeded_rng, SeededRng};
