//! Layer kernels: forward and backward passes for every layer kind the
//! network uses.

pub mod activation;
pub mod batchnorm;
pub mod conv;
pub mod dense;
pub mod pool;
pub mod softmax;

pub use activation::{dropout_backward, dropout_train, relu, relu_backward, DropoutConfig, DropoutMask};
pub use batchnorm::{BatchNorm, BatchNormCache, BatchNormGrads};
pub use conv::{Conv3d, Conv3dGrads};
pub use dense::{Dense, DenseGrads};
pub use pool::{maxpool3d_backward, maxpool3d_forward, ArgmaxRecord, Pool3dConfig};
pub use softmax::{softmax, softmax_cross_entropy};

/// Whether a forward pass uses batch statistics and dropout (`Train`) or
/// running statistics and identity dropout (`Eval`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}
