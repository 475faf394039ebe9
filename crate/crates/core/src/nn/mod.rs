//! Minimal dense-tensor engine for the sequence classifier.
//!
//! Layers: embedding, two kernel-3 convolutions (ReLU), max pool, a kernel-5
//! convolution (ReLU), max pool, flatten, and one sigmoid unit. Gradients
//! are derived by hand per layer; there is no general autodiff.

mod adadelta;
mod checkpoint;
mod layers;
mod model;
mod tensor;

pub use adadelta::{adadelta_update, Adadelta, AdadeltaConfig};
pub use checkpoint::{Checkpoint, CheckpointHeader, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use layers::{
    bce_grad, bce_loss, bce_sigmoid_grad, conv1d_backward, conv1d_forward, dense_sigmoid_forward,
    embedding_backward, embedding_forward, maxpool1d, maxpool1d_backward, sigmoid, PROB_EPSILON,
};
pub use model::{
    count_parameters, ForwardCache, LayerLengths, Model, ModelConfig, Parameters, CONV1_KERNEL,
    CONV2_KERNEL, CONV3_KERNEL, PARAM_NAMES,
};
pub use tensor::{Real, Tensor};
