//! Spatiotemporal 3D convolutional networks for multiclass video anomaly
//! recognition: frame preprocessing and flip augmentation, 16-frame cube
//! assembly, a C3D-style network with hand-written backpropagation, SGD
//! training, windowed inference and ROC/AUC/confusion-matrix evaluation.

pub mod cli;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod scalar;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::{Shape, Tensor};
