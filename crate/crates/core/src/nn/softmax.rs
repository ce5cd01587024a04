use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

fn rows<T: Scalar>(logits: &Tensor<T>) -> Result<usize> {
    if logits.rank() != 2 || logits.dims()[1] < 2 {
        return Err(Error::ShapeMismatch(format!(
            "softmax expects N×C logits with C ≥ 2, got {}",
            logits.shape()
        )));
    }
    Ok(logits.dims()[1])
}

/// Row-wise softmax with the max subtracted first.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    let c = rows(logits)?;
    let mut out = Vec::with_capacity(logits.numel());
    for row in logits.data().chunks_exact(c) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = row.iter().map(|&z| (z - max).exp()).collect();
        let total: T = exps.iter().copied().sum();
        out.extend(exps.into_iter().map(|e| e / total));
    }
    Tensor::from_vec(logits.dims(), out)
}

/// Mean cross-entropy of softmax(logits) against integer labels, and its
/// gradient `(p − onehot)/N` with respect to the logits.
pub fn softmax_cross_entropy<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<(f64, Tensor<T>)> {
    let c = rows(logits)?;
    let n = logits.dims()[0];
    if labels.len() != n {
        return Err(Error::ShapeMismatch(format!("{} labels for {n} logit rows", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
        return Err(Error::Label { label: bad, classes: c });
    }
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.numel());
    let inv_n = 1.0 / n as f64;
    for (row, &label) in logits.data().chunks_exact(c).zip(labels) {
        let max = row.iter().map(|v| v.as_f64()).fold(f64::NEG_INFINITY, f64::max);
        let log_sum = row.iter().map(|v| (v.as_f64() - max).exp()).sum::<f64>().ln();
        loss -= row[label].as_f64() - max - log_sum;
        for (k, &z) in row.iter().enumerate() {
            let p = (z.as_f64() - max - log_sum).exp();
            let target = if k == label { 1.0 } else { 0.0 };
            grad.push(T::from_f64((p - target) * inv_n));
        }
    }
    Ok((loss * inv_n, Tensor::from_vec(logits.dims(), grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{central_difference, random_tensor, rel_err};

    #[test]
    fn uniform_logits() {
        let p = softmax(&Tensor::<f64>::zeros(&[2, 14]).unwrap()).unwrap();
        assert!(p.data().iter().all(|&v| (v - 1.0 / 14.0).abs() < 1e-12));
        let (loss, _) = softmax_cross_entropy(&Tensor::<f64>::zeros(&[3, 14]).unwrap(), &[0, 5, 13]).unwrap();
        assert!((loss - 14f64.ln()).abs() < 1e-12);
        assert!((loss - 2.6391).abs() < 1e-4);
    }

    #[test]
    fn analytic_two_class() {
        let z = Tensor::from_vec(&[1, 2], vec![0.0, 3f64.ln()]).unwrap();
        let p = softmax(&z).unwrap();
        assert!((p.at(&[0, 0]) - 0.25).abs() < 1e-12);
        assert!((p.at(&[0, 1]) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn shift_invariance_and_row_sums() {
        let z = random_tensor::<f64>(&[5, 14], 1).scale(10.0);
        let shifted = z.map(|v| v + 123.0);
        let (p, q) = (softmax(&z).unwrap(), softmax(&shifted).unwrap());
        assert!(p.max_abs_diff(&q).unwrap() < 1e-12);
        for row in p.data().chunks(14) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        assert_eq!(p.argmax_rows(), z.argmax_rows());
    }

    #[test]
    fn confident_correct_prediction_has_zero_loss() {
        let z = Tensor::from_vec(&[1, 3], vec![0.0f64, 800.0, 0.0]).unwrap();
        let (loss, _) = softmax_cross_entropy(&z, &[1]).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let z = random_tensor::<f64>(&[4, 5], 2).scale(3.0);
        let labels = [0, 4, 2, 2];
        let (_, grad) = softmax_cross_entropy(&z, &labels).unwrap();
        let num = central_difference(&z, 1e-5, |zp| softmax_cross_entropy(zp, &labels).unwrap().0);
        assert!(rel_err(&grad, &num) < 1e-5);
    }

    #[test]
    fn out_of_range_label() {
        let z = Tensor::<f32>::zeros(&[1, 14]).unwrap();
        assert!(matches!(
            softmax_cross_entropy(&z, &[14]),
            Err(Error::Label { label: 14, classes: 14 })
        ));
    }
}
