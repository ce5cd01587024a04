use crate::error::{Error, Result};
use crate::scalar::{MatRef, Scalar};
use crate::tensor::Tensor;

/// Fully connected layer, `y = x·W + b` with `W` stored `in × out`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T = f32> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct DenseGrads<T> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        if weight.rank() != 2 || bias.dims() != [weight.dims()[1]] {
            return Err(Error::ShapeMismatch(format!(
                "dense weight {} / bias {} are inconsistent",
                weight.shape(),
                bias.shape()
            )));
        }
        Ok(Self { weight, bias })
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Result<Self> {
        Self::new(Tensor::zeros(&[inputs, outputs])?, Tensor::zeros(&[outputs])?)
    }

    pub fn inputs(&self) -> usize {
        self.weight.dims()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weight.dims()[1]
    }

    pub fn output_dims(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input.len() != 2 || input[1] != self.inputs() {
            return Err(Error::ShapeMismatch(format!(
                "dense layer expects N×{}, got {input:?}",
                self.inputs()
            )));
        }
        Ok(vec![input[0], self.outputs()])
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let dims = self.output_dims(x.dims())?;
        let (n, out) = (dims[0], dims[1]);
        let mut y = Vec::with_capacity(n * out);
        for _ in 0..n {
            y.extend_from_slice(self.bias.data());
        }
        T::gemm(
            MatRef::row_major(x.data(), n, self.inputs()),
            MatRef::row_major(self.weight.data(), self.inputs(), out),
            T::one(),
            &mut y,
        );
        Tensor::from_vec(&dims, y)
    }

    pub fn backward(&self, x: &Tensor<T>, grad_out: &Tensor<T>) -> Result<DenseGrads<T>> {
        let dims = self.output_dims(x.dims())?;
        if grad_out.dims() != dims.as_slice() {
            return Err(Error::ShapeMismatch(format!(
                "dense grad_out {} does not match output {dims:?}",
                grad_out.shape()
            )));
        }
        let (n, inp, out) = (dims[0], self.inputs(), self.outputs());
        let g = MatRef::row_major(grad_out.data(), n, out);
        let mut grad_w = vec![T::zero(); inp * out];
        T::gemm(MatRef::row_major(x.data(), n, inp).t(), g, T::zero(), &mut grad_w);
        let mut grad_x = vec![T::zero(); n * inp];
        T::gemm(g, MatRef::row_major(self.weight.data(), inp, out).t(), T::zero(), &mut grad_x);
        let mut grad_b = vec![T::zero(); out];
        for row in grad_out.data().chunks_exact(out) {
            for (acc, &v) in grad_b.iter_mut().zip(row) {
                *acc = *acc + v;
            }
        }
        Ok(DenseGrads {
            input: Tensor::from_vec(x.dims(), grad_x)?,
            weight: Tensor::from_vec(&[inp, out], grad_w)?,
            bias: Tensor::from_vec(&[out], grad_b)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{central_difference, random_tensor, rel_err};

    #[test]
    fn fc6_parameter_count() {
        let (inputs, outputs) = (6 * 6 * 512, 4096);
        assert_eq!(inputs, 18432);
        assert_eq!(inputs * outputs + outputs, 75_501_568);
    }

    #[test]
    fn identity_weight_passes_input_through() {
        let eye = Tensor::from_shape_fn(&[4, 4], |ix| if ix[0] == ix[1] { 1.0f32 } else { 0.0 }).unwrap();
        let layer = Dense::new(eye, Tensor::zeros(&[4]).unwrap()).unwrap();
        let x = random_tensor::<f32>(&[3, 4], 1);
        assert_eq!(layer.forward(&x).unwrap(), x);
    }

    #[test]
    fn extent_mismatch_is_rejected() {
        let layer = Dense::<f32>::zeros(5, 2).unwrap();
        assert!(matches!(
            layer.forward(&Tensor::zeros(&[3, 4]).unwrap()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let layer = Dense::new(random_tensor::<f64>(&[6, 4], 2), random_tensor(&[4], 3)).unwrap();
        let x = random_tensor::<f64>(&[3, 6], 4);
        let probe = random_tensor::<f64>(&[3, 4], 5);
        let loss = |l: &Dense<f64>, x: &Tensor<f64>| -> f64 {
            l.forward(x).unwrap().data().iter().zip(probe.data()).map(|(a, b)| a * b).sum()
        };
        let g = layer.backward(&x, &probe).unwrap();
        assert!(rel_err(&g.input, &central_difference(&x, 1e-5, |xp| loss(&layer, xp))) < 1e-4);
        let num_w = central_difference(&layer.weight, 1e-5, |w| {
            loss(&Dense::new(w.clone(), layer.bias.clone()).unwrap(), &x)
        });
        assert!(rel_err(&g.weight, &num_w) < 1e-4);
        let num_b = central_difference(&layer.bias, 1e-5, |b| {
            loss(&Dense::new(layer.weight.clone(), b.clone()).unwrap(), &x)
        });
        assert!(rel_err(&g.bias, &num_b) < 1e-4);
    }
}
