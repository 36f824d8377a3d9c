//! Small dense networks with hand-written backprop, sized for ABR policies.

mod adam;
mod mlp;
mod policy;

pub use adam::{Adam, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use mlp::{Checkpoint, CheckpointMeta, ForwardCache, Gradients, Head, Mlp};
pub use policy::{categorical_entropy, log_softmax, softmax, PolicyValueNet};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("expected input of length {expected}, got {got}")]
    InputDim { expected: usize, got: usize },
    #[error("expected output gradient of length {expected}, got {got}")]
    OutputDim { expected: usize, got: usize },
    #[error("forward cache does not belong to this network")]
    CacheMismatch,
    #[error("gradient shapes do not match the network")]
    GradientShape,
    #[error("non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: usize },
    #[error("invalid network: {0}")]
    Invalid(String),
}
