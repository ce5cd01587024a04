//! SGD with classic momentum and a reduce-on-plateau schedule.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// One velocity tensor per parameter, starting at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SgdMomentum<T = f32> {
    pub velocity: Vec<Tensor<T>>,
}

impl<T: Scalar> SgdMomentum<T> {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor<T>>) -> Self {
        Self {
            velocity: params
                .into_iter()
                .map(|p| Tensor::zeros(p.dims()).expect("parameter dims are valid"))
                .collect(),
        }
    }

    /// `v ← μ·v − lr·g; w ← w + v` for every parameter.
    pub fn step(&mut self, params: &mut [&mut Tensor<T>], grads: &[Tensor<T>], lr: f64, momentum: f64) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.velocity.len() {
            return Err(Error::ShapeMismatch(format!(
                "sgd step over {} parameters, {} gradients, {} velocities",
                params.len(),
                grads.len(),
                self.velocity.len()
            )));
        }
        for ((p, g), v) in params.iter().zip(grads).zip(&self.velocity) {
            if p.dims() != g.dims() || p.dims() != v.dims() {
                return Err(Error::ShapeMismatch(format!(
                    "parameter {} vs gradient {} vs velocity {}",
                    p.shape(),
                    g.shape(),
                    v.shape()
                )));
            }
        }
        let (lr, mu) = (T::from_f64(lr), T::from_f64(momentum));
        for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.velocity) {
            for ((w, &gi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(v.data_mut()) {
                *vi = mu * *vi - lr * gi;
                *w = *w + *vi;
            }
        }
        Ok(())
    }
}

/// Multiplies the learning rate by `factor` once the monitored loss has
/// failed to improve by more than `threshold` for `patience` epochs running.
#[derive(Clone, Debug, PartialEq)]
pub struct PlateauSchedule {
    pub lr: f64,
    pub factor: f64,
    pub patience: usize,
    pub threshold: f64,
    best: f64,
    bad_epochs: usize,
}

impl PlateauSchedule {
    pub fn new(lr: f64, factor: f64, patience: usize, threshold: f64) -> Self {
        Self {
            lr,
            factor,
            patience,
            threshold,
            best: f64::INFINITY,
            bad_epochs: 0,
        }
    }

    /// Records one epoch's loss and returns the learning rate for the next.
    pub fn update(&mut self, loss: f64) -> f64 {
        if loss < self.best - self.threshold {
            self.best = loss;
            self.bad_epochs = 0;
        } else {
            self.bad_epochs += 1;
            if self.bad_epochs >= self.patience {
                self.lr *= self.factor;
                self.bad_epochs = 0;
            }
        }
        self.lr
    }
}
