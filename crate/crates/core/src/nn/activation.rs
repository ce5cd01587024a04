//! ReLU and inverted dropout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Passes the gradient where `x > 0`; the subgradient at 0 is taken as 0.
pub fn relu_backward<T: Scalar>(x: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if x.dims() != grad_out.dims() {
        return Err(Error::ShapeMismatch(format!(
            "relu grad_out {} vs input {}",
            grad_out.shape(),
            x.shape()
        )));
    }
    let data = x
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&v, &g)| if v > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::from_vec(x.dims(), data)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DropoutConfig {
    pub rate: f64,
    pub seed: u64,
}

impl DropoutConfig {
    pub fn new(rate: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate {rate} must lie in [0, 1)")));
        }
        Ok(Self { rate, seed })
    }
}

/// Per-element multipliers: 0 for dropped, `1/(1−rate)` for kept.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMask<T> {
    pub scale: Vec<T>,
}

/// Train-mode dropout. `stream` selects an independent mask sequence, so a
/// caller that numbers its steps gets reproducible and distinct masks.
pub fn dropout_train<T: Scalar>(
    cfg: &DropoutConfig,
    x: &Tensor<T>,
    stream: u64,
) -> Result<(Tensor<T>, DropoutMask<T>)> {
    DropoutConfig::new(cfg.rate, cfg.seed)?;
    let keep = T::from_f64(1.0 / (1.0 - cfg.rate));
    let scale: Vec<T> = if cfg.rate == 0.0 {
        vec![T::one(); x.numel()]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        (0..x.numel())
            .map(|_| if rng.random::<f64>() < cfg.rate { T::zero() } else { keep })
            .collect()
    };
    let data = x.data().iter().zip(&scale).map(|(&v, &s)| v * s).collect();
    Ok((Tensor::from_vec(x.dims(), data)?, DropoutMask { scale }))
}

pub fn dropout_backward<T: Scalar>(mask: &DropoutMask<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if mask.scale.len() != grad_out.numel() {
        return Err(Error::ShapeMismatch(format!(
            "dropout mask has {} entries, grad_out {}",
            mask.scale.len(),
            grad_out.shape()
        )));
    }
    let data = grad_out.data().iter().zip(&mask.scale).map(|(&g, &s)| g * s).collect();
    Tensor::from_vec(grad_out.dims(), data)
}
