//! Batch normalization over the last (feature) axis.
//!
//! Statistics are taken over every non-feature position, so a
//! `N×T×H×W×C` activation is normalized per channel across batch, time
//! and space, and an `N×F` activation per feature across the batch.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const DEFAULT_EPSILON: f64 = 1e-5;
pub const DEFAULT_STAT_MOMENTUM: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm<T = f32> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    pub epsilon: T,
    pub stat_momentum: T,
}

/// Values saved by a train-mode forward pass.
#[derive(Clone, Debug)]
pub struct BatchNormCache<T> {
    pub normalized: Tensor<T>,
    pub inv_std: Vec<T>,
    pub batch_mean: Vec<T>,
    pub batch_var: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct BatchNormGrads<T> {
    pub input: Tensor<T>,
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
}

impl<T: Scalar> BatchNorm<T> {
    /// γ = 1, β = 0, running mean 0, running variance 1.
    pub fn new(features: usize) -> Result<Self> {
        Ok(Self {
            gamma: Tensor::new(&[features], T::one())?,
            beta: Tensor::zeros(&[features])?,
            running_mean: Tensor::zeros(&[features])?,
            running_var: Tensor::new(&[features], T::one())?,
            epsilon: T::from_f64(DEFAULT_EPSILON),
            stat_momentum: T::from_f64(DEFAULT_STAT_MOMENTUM),
        })
    }

    pub fn features(&self) -> usize {
        self.gamma.numel()
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<usize> {
        let f = *x.dims().last().unwrap();
        if f != self.features() {
            return Err(Error::ShapeMismatch(format!(
                "batch norm has {} features, input {} has {f}",
                self.features(),
                x.shape()
            )));
        }
        Ok(x.numel() / f)
    }

    pub fn forward_train(&self, x: &Tensor<T>) -> Result<(Tensor<T>, BatchNormCache<T>)> {
        let m = self.check_input(x)?;
        if m < 2 {
            return Err(Error::DegenerateBatch { count: m });
        }
        let f = self.features();
        let inv_m = T::one() / T::from_f64(m as f64);

        let mut mean = vec![T::zero(); f];
        for row in x.data().chunks_exact(f) {
            for (acc, &v) in mean.iter_mut().zip(row) {
                *acc = *acc + v;
            }
        }
        mean.iter_mut().for_each(|v| *v = *v * inv_m);

        let mut var = vec![T::zero(); f];
        for row in x.data().chunks_exact(f) {
            for ((acc, &v), &mu) in var.iter_mut().zip(row).zip(&mean) {
                let d = v - mu;
                *acc = *acc + d * d;
            }
        }
        var.iter_mut().for_each(|v| *v = *v * inv_m);

        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + self.epsilon).sqrt()).collect();
        let mut normalized = Vec::with_capacity(x.numel());
        let mut out = Vec::with_capacity(x.numel());
        for row in x.data().chunks_exact(f) {
            for (c, &v) in row.iter().enumerate() {
                let xh = (v - mean[c]) * inv_std[c];
                normalized.push(xh);
                out.push(self.gamma.data()[c] * xh + self.beta.data()[c]);
            }
        }
        let cache = BatchNormCache {
            normalized: Tensor::from_vec(x.dims(), normalized)?,
            inv_std,
            batch_mean: mean,
            batch_var: var,
        };
        Ok((Tensor::from_vec(x.dims(), out)?, cache))
    }

    /// `running ← (1 − momentum)·running + momentum·batch` for mean and variance.
    pub fn update_running_stats(&mut self, cache: &BatchNormCache<T>) {
        let mom = self.stat_momentum;
        let keep = T::one() - mom;
        for (r, &b) in self.running_mean.data_mut().iter_mut().zip(&cache.batch_mean) {
            *r = keep * *r + mom * b;
        }
        for (r, &b) in self.running_var.data_mut().iter_mut().zip(&cache.batch_var) {
            *r = keep * *r + mom * b;
        }
    }

    pub fn forward_eval(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let f = self.features();
        self.check_input(x)?;
        let scale: Vec<T> = self
            .running_var
            .data()
            .iter()
            .zip(self.gamma.data())
            .map(|(&v, &g)| g / (v + self.epsilon).sqrt())
            .collect();
        let mut out = Vec::with_capacity(x.numel());
        for row in x.data().chunks_exact(f) {
            for (c, &v) in row.iter().enumerate() {
                out.push((v - self.running_mean.data()[c]) * scale[c] + self.beta.data()[c]);
            }
        }
        Tensor::from_vec(x.dims(), out)
    }

    pub fn backward(&self, cache: &BatchNormCache<T>, grad_out: &Tensor<T>) -> Result<BatchNormGrads<T>> {
        if grad_out.dims() != cache.normalized.dims() {
            return Err(Error::ShapeMismatch(format!(
                "batch norm grad_out {} does not match cached input {}",
                grad_out.shape(),
                cache.normalized.shape()
            )));
        }
        let f = self.features();
        let m = grad_out.numel() / f;
        let mut grad_gamma = vec![T::zero(); f];
        let mut grad_beta = vec![T::zero(); f];
        for (grow, xrow) in grad_out.data().chunks_exact(f).zip(cache.normalized.data().chunks_exact(f)) {
            for c in 0..f {
                grad_beta[c] = grad_beta[c] + grow[c];
                grad_gamma[c] = grad_gamma[c] + grow[c] * xrow[c];
            }
        }
        // dx = γ·inv_std/m · (m·dy − Σdy − x̂·Σ(dy·x̂))
        let m_t = T::from_f64(m as f64);
        let coef: Vec<T> = (0..f)
            .map(|c| self.gamma.data()[c] * cache.inv_std[c] / m_t)
            .collect();
        let mut grad_x = Vec::with_capacity(grad_out.numel());
        for (grow, xrow) in grad_out.data().chunks_exact(f).zip(cache.normalized.data().chunks_exact(f)) {
            for c in 0..f {
                grad_x.push(coef[c] * (m_t * grow[c] - grad_beta[c] - xrow[c] * grad_gamma[c]));
            }
        }
        Ok(BatchNormGrads {
            input: Tensor::from_vec(grad_out.dims(), grad_x)?,
            gamma: Tensor::from_vec(&[f], grad_gamma)?,
            beta: Tensor::from_vec(&[f], grad_beta)?,
        })
    }
}
