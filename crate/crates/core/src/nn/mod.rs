//! From-scratch neural network stack for sequential models.

mod activation;
mod batchnorm;
mod conv;
mod dense;
mod dropout;
pub mod gradcheck;
mod layer;
mod loss;
mod model;
mod optim;
mod pool;
mod tensor;
mod train;

pub use activation::{activation_backward, activation_forward, Activation, ActivationKind};
pub use batchnorm::{batchnorm2d_backward, batchnorm2d_forward, BatchNorm2d, BatchNormCache, BN_EPS, BN_MOMENTUM};
pub use conv::{conv2d, conv2d_backward, conv_output_dim, Conv2d, ConvGeometry, ConvGrads};
pub use dense::{dense, dense_backward, Dense};
pub use dropout::{dropout, Dropout};
pub use gradcheck::{gradcheck_layer, gradcheck_model, GradcheckOptions, GradcheckReport};
pub use layer::{Flatten, Layer, LayerKind, Param};
pub use loss::nll_loss;
pub use model::{Model, ModelSnapshot};
pub use optim::{adam_update, Adam, AdamConfig};
pub use pool::{pool2d, pool2d_backward, Pool2d, PoolKind};
pub use tensor::{Real, Tensor};
pub use train::{accuracy_of, predict, train, LabeledBatch, TrainConfig, TrainReport};

/// Whether layers use batch statistics and stochastic regularization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Train,
    Eval,
}
