//! A small CNN engine: dense tensors, the five layer kinds with exact
//! backpropagation, seeded initialization, SGD/Adam, architecture presets,
//! and binary checkpoints.

pub mod checkpoint;
pub mod layers;
pub mod model;
pub mod network;
pub mod optim;
pub mod tensor;

pub use layers::{
    avgpool_backward, avgpool_forward, conv2d_backward, conv2d_forward, fc_backward, fc_forward,
    maxpool_backward, maxpool_forward, relu_backward_matrix, relu_backward_tensor,
    relu_forward_matrix, relu_forward_tensor, softmax, softmax_cross_entropy,
};
pub use model::{alexnet_mod, alexnet_mod_scaled, lenet5, lenet5_wen, model_name, preset, LayerSpec, ModelSpec};
pub use network::{GradPair, Gradients, Network};
pub use optim::{train_step, Optimizer, OptimizerKind};
pub use params::{init_params, ParamPair, ParamSet};
pub use tensor::{Matrix, Tensor4};

pub mod params;
