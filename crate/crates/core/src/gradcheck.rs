//! Finite-difference tooling for checking hand-written backward passes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Central-difference gradient of `loss` with respect to every element of `at`.
pub fn central_difference<T: Scalar>(
    at: &Tensor<T>,
    step: f64,
    mut loss: impl FnMut(&Tensor<T>) -> f64,
) -> Tensor<T> {
    let mut probe = at.clone();
    let mut grad = Vec::with_capacity(at.numel());
    for i in 0..at.numel() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + T::from_f64(step);
        let plus = loss(&probe);
        probe.data_mut()[i] = orig - T::from_f64(step);
        let minus = loss(&probe);
        probe.data_mut()[i] = orig;
        grad.push(T::from_f64((plus - minus) / (2.0 * step)));
    }
    Tensor::from_vec(at.dims(), grad).expect("same shape as input")
}

/// `‖a − b‖₂ / max(‖a‖₂, ‖b‖₂)`, or the absolute difference norm when both are ~0.
pub fn rel_err<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> f64 {
    assert_eq!(a.dims(), b.dims(), "rel_err on different shapes");
    let norm = |t: &Tensor<T>| t.data().iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt();
    let diff = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x.as_f64() - y.as_f64()).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = norm(a).max(norm(b));
    if scale < 1e-8 {
        diff
    } else {
        diff / scale
    }
}

/// Uniform `[-1, 1)` tensor from a fixed seed.
pub fn random_tensor<T: Scalar>(dims: &[usize], seed: u64) -> Tensor<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_shape_fn(dims, |_| T::from_f64(rng.random_range(-1.0..1.0))).expect("valid dims")
}
