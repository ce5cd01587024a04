//! 3D convolution, stride 1, zero "same" padding.
//!
//! Both passes lower the convolution to GEMM one `(n, t)` output slice at a
//! time: the slice's receptive fields are unrolled into a `(H·W) × (kt·kh·kw·C_in)`
//! patch matrix and multiplied by the kernel viewed as `(kt·kh·kw·C_in) × C_out`.

use crate::error::{Error, Result};
use crate::scalar::{MatRef, Scalar};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct Conv3d<T = f32> {
    /// `kt × kh × kw × c_in × c_out`
    pub kernel: Tensor<T>,
    /// `c_out`
    pub bias: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct Conv3dGrads<T> {
    pub input: Tensor<T>,
    pub kernel: Tensor<T>,
    pub bias: Tensor<T>,
}

struct Geometry {
    n: usize,
    t: usize,
    h: usize,
    w: usize,
    c_in: usize,
    c_out: usize,
    k: [usize; 3],
    patch: usize,
}

impl<T: Scalar> Conv3d<T> {
    pub fn new(kernel: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        if kernel.rank() != 5 {
            return Err(Error::ShapeMismatch(format!("conv kernel must be rank 5, got {}", kernel.shape())));
        }
        let kd = kernel.dims();
        if kd[..3].iter().any(|k| k % 2 == 0) {
            return Err(Error::ShapeMismatch(format!(
                "same padding needs odd kernel extents, got {}",
                kernel.shape()
            )));
        }
        if bias.dims() != [kd[4]] {
            return Err(Error::ShapeMismatch(format!(
                "conv bias {} does not match {} output channels",
                bias.shape(),
                kd[4]
            )));
        }
        Ok(Self { kernel, bias })
    }

    pub fn zeros(k: [usize; 3], c_in: usize, c_out: usize) -> Result<Self> {
        Self::new(
            Tensor::zeros(&[k[0], k[1], k[2], c_in, c_out])?,
            Tensor::zeros(&[c_out])?,
        )
    }

    pub fn in_channels(&self) -> usize {
        self.kernel.dims()[3]
    }

    pub fn out_channels(&self) -> usize {
        self.kernel.dims()[4]
    }

    pub fn output_dims(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input.len() != 5 {
            return Err(Error::ShapeMismatch(format!("conv3d input must be rank 5, got {input:?}")));
        }
        if input[4] != self.in_channels() {
            return Err(Error::ShapeMismatch(format!(
                "conv3d expects {} input channels, got {}",
                self.in_channels(),
                input[4]
            )));
        }
        Ok(vec![input[0], input[1], input[2], input[3], self.out_channels()])
    }

    fn geometry(&self, x: &Tensor<T>) -> Result<Geometry> {
        self.output_dims(x.dims())?;
        let d = x.dims();
        let kd = self.kernel.dims();
        Ok(Geometry {
            n: d[0],
            t: d[1],
            h: d[2],
            w: d[3],
            c_in: d[4],
            c_out: kd[4],
            k: [kd[0], kd[1], kd[2]],
            patch: kd[0] * kd[1] * kd[2] * d[4],
        })
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let g = self.geometry(x)?;
        let plane = g.h * g.w;
        let mut out = vec![T::zero(); g.n * g.t * plane * g.c_out];
        let mut cols = vec![T::zero(); plane * g.patch];
        let kernel = MatRef::row_major(self.kernel.data(), g.patch, g.c_out);
        for n in 0..g.n {
            for t in 0..g.t {
                im2col(x.data(), &g, n, t, &mut cols);
                let start = (n * g.t + t) * plane * g.c_out;
                let slice = &mut out[start..start + plane * g.c_out];
                T::gemm(MatRef::row_major(&cols, plane, g.patch), kernel, T::zero(), slice);
                for row in slice.chunks_exact_mut(g.c_out) {
                    for (v, &b) in row.iter_mut().zip(self.bias.data()) {
                        *v = *v + b;
                    }
                }
            }
        }
        Tensor::from_vec(&[g.n, g.t, g.h, g.w, g.c_out], out)
    }

    pub fn backward(&self, x: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Conv3dGrads<T>> {
        let g = self.geometry(x)?;
        let expected = self.output_dims(x.dims())?;
        if grad_out.dims() != expected.as_slice() {
            return Err(Error::ShapeMismatch(format!(
                "conv3d grad_out {} does not match forward output {expected:?}",
                grad_out.shape()
            )));
        }
        let plane = g.h * g.w;
        let mut grad_x = vec![T::zero(); x.numel()];
        let mut grad_k = vec![T::zero(); self.kernel.numel()];
        let mut grad_b = vec![T::zero(); g.c_out];
        let mut cols = vec![T::zero(); plane * g.patch];
        let mut grad_cols = vec![T::zero(); plane * g.patch];
        let kernel_t = MatRef::row_major(self.kernel.data(), g.patch, g.c_out).t();

        for n in 0..g.n {
            for t in 0..g.t {
                let start = (n * g.t + t) * plane * g.c_out;
                let gslice = &grad_out.data()[start..start + plane * g.c_out];
                if gslice.iter().all(|v| v.is_zero()) {
                    continue;
                }
                for row in gslice.chunks_exact(g.c_out) {
                    for (acc, &v) in grad_b.iter_mut().zip(row) {
                        *acc = *acc + v;
                    }
                }
                let gmat = MatRef::row_major(gslice, plane, g.c_out);
                im2col(x.data(), &g, n, t, &mut cols);
                T::gemm(MatRef::row_major(&cols, plane, g.patch).t(), gmat, T::one(), &mut grad_k);
                T::gemm(gmat, kernel_t, T::zero(), &mut grad_cols);
                col2im(&grad_cols, &g, n, t, &mut grad_x);
            }
        }
        Ok(Conv3dGrads {
            input: Tensor::from_vec(x.dims(), grad_x)?,
            kernel: Tensor::from_vec(self.kernel.dims(), grad_k)?,
            bias: Tensor::from_vec(&[g.c_out], grad_b)?,
        })
    }
}

/// Visits every (row, patch column block, source offset) triple of the patch
/// matrix for output slice `(n, t)`. `src` is `None` where the receptive
/// field falls into zero padding.
#[inline]
fn for_each_patch(g: &Geometry, n: usize, t: usize, mut f: impl FnMut(usize, Option<usize>)) {
    let [kt, kh, kw] = g.k;
    let (pt, ph, pw) = (kt / 2, kh / 2, kw / 2);
    let mut col = 0;
    let mut row_base = 0;
    for h in 0..g.h {
        for w in 0..g.w {
            col = 0;
            for dt in 0..kt {
                let st = (t + dt).checked_sub(pt).filter(|&v| v < g.t);
                for dh in 0..kh {
                    let sh = (h + dh).checked_sub(ph).filter(|&v| v < g.h);
                    for dw in 0..kw {
                        let sw = (w + dw).checked_sub(pw).filter(|&v| v < g.w);
                        let src = match (st, sh, sw) {
                            (Some(st), Some(sh), Some(sw)) => {
                                Some((((n * g.t + st) * g.h + sh) * g.w + sw) * g.c_in)
                            }
                            _ => None,
                        };
                        f(row_base + col, src);
                        col += g.c_in;
                    }
                }
            }
            row_base += g.patch;
        }
    }
    debug_assert_eq!(col, g.patch);
}

fn im2col<T: Scalar>(x: &[T], g: &Geometry, n: usize, t: usize, cols: &mut [T]) {
    let c = g.c_in;
    for_each_patch(g, n, t, |dst, src| match src {
        Some(src) => cols[dst..dst + c].copy_from_slice(&x[src..src + c]),
        None => cols[dst..dst + c].fill(T::zero()),
    });
}

fn col2im<T: Scalar>(cols: &[T], g: &Geometry, n: usize, t: usize, grad_x: &mut [T]) {
    let c = g.c_in;
    for_each_patch(g, n, t, |dst, src| {
        if let Some(src) = src {
            for (gx, &v) in grad_x[src..src + c].iter_mut().zip(&cols[dst..dst + c]) {
                *gx = *gx + v;
            }
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{central_difference, random_tensor, rel_err};

    /// Seven nested loops straight from the definition.
    fn direct_conv(layer: &Conv3d<f64>, x: &Tensor<f64>) -> Tensor<f64> {
        let [n, t, h, w, ci] = <[usize; 5]>::try_from(x.dims()).unwrap();
        let kd = layer.kernel.dims();
        let co = kd[4];
        let (pt, ph, pw) = (kd[0] / 2, kd[1] / 2, kd[2] / 2);
        let padded = x.pad(&[(0, 0), (pt, pt), (ph, ph), (pw, pw), (0, 0)], 0.0).unwrap();
        Tensor::from_shape_fn(&[n, t, h, w, co], |ix| {
            let mut acc = layer.bias.at(&[ix[4]]);
            for dt in 0..kd[0] {
                for dh in 0..kd[1] {
                    for dw in 0..kd[2] {
                        for c in 0..ci {
                            acc += layer.kernel.at(&[dt, dh, dw, c, ix[4]])
                                * padded.at(&[ix[0], ix[1] + dt, ix[2] + dh, ix[3] + dw, c]);
                        }
                    }
                }
            }
            acc
        })
        .unwrap()
    }

    #[test]
    fn unit_kernel_is_identity() {
        let layer = Conv3d::new(
            Tensor::<f32>::new(&[1, 1, 1, 1, 1], 1.0).unwrap(),
            Tensor::zeros(&[1]).unwrap(),
        )
        .unwrap();
        let x = random_tensor::<f32>(&[2, 3, 4, 5, 1], 1);
        assert_eq!(layer.forward(&x).unwrap(), x);
        let g = random_tensor::<f32>(&[2, 3, 4, 5, 1], 2);
        assert_eq!(layer.backward(&x, &g).unwrap().input, g);
    }

    #[test]
    fn ones_kernel_interior_voxel_sums_27() {
        let layer = Conv3d::new(
            Tensor::<f32>::new(&[3, 3, 3, 1, 1], 1.0).unwrap(),
            Tensor::zeros(&[1]).unwrap(),
        )
        .unwrap();
        let x = Tensor::<f32>::new(&[1, 3, 3, 3, 1], 1.0).unwrap();
        let y = layer.forward(&x).unwrap();
        assert_eq!(y.at(&[0, 1, 1, 1, 0]), 27.0);
        // a corner sees 2·2·2 in-bounds voxels
        assert_eq!(y.at(&[0, 0, 0, 0, 0]), 8.0);
    }

    #[test]
    fn matches_direct_loop_oracle() {
        let layer = Conv3d::new(random_tensor::<f64>(&[3, 3, 3, 2, 3], 5), random_tensor(&[3], 6)).unwrap();
        let x = random_tensor::<f64>(&[1, 4, 5, 5, 2], 7);
        let got = layer.forward(&x).unwrap();
        let want = direct_conv(&layer, &x);
        assert!(got.max_abs_diff(&want).unwrap() < 1e-5);
    }

    #[test]
    fn channel_mismatch_is_a_shape_error() {
        let layer = Conv3d::<f32>::zeros([3, 3, 3], 2, 4).unwrap();
        let x = Tensor::zeros(&[1, 2, 2, 2, 3]).unwrap();
        assert!(matches!(layer.forward(&x), Err(Error::ShapeMismatch(_))));
        assert!(Conv3d::<f32>::zeros([2, 3, 3], 1, 1).is_err());
    }

    #[test]
    fn zero_grad_out_gives_zero_grads() {
        let layer = Conv3d::new(random_tensor::<f32>(&[3, 3, 3, 2, 2], 1), random_tensor(&[2], 2)).unwrap();
        let x = random_tensor::<f32>(&[1, 2, 3, 3, 2], 3);
        let g = layer.backward(&x, &Tensor::zeros(&[1, 2, 3, 3, 2]).unwrap()).unwrap();
        assert!(g.input.data().iter().chain(g.kernel.data()).chain(g.bias.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let layer = Conv3d::new(random_tensor::<f64>(&[3, 3, 3, 2, 3], 11), random_tensor(&[3], 12)).unwrap();
        let x = random_tensor::<f64>(&[2, 3, 4, 4, 2], 13);
        let probe = random_tensor::<f64>(&[2, 3, 4, 4, 3], 14);
        let loss = |l: &Conv3d<f64>, x: &Tensor<f64>| -> f64 {
            l.forward(x).unwrap().data().iter().zip(probe.data()).map(|(a, b)| a * b).sum()
        };
        let grads = layer.backward(&x, &probe).unwrap();

        let num_x = central_difference(&x, 1e-5, |xp| loss(&layer, xp));
        assert!(rel_err(&grads.input, &num_x) < 1e-4);
        let num_k = central_difference(&layer.kernel, 1e-5, |k| {
            loss(&Conv3d::new(k.clone(), layer.bias.clone()).unwrap(), &x)
        });
        assert!(rel_err(&grads.kernel, &num_k) < 1e-4);
        let num_b = central_difference(&layer.bias, 1e-5, |b| {
            loss(&Conv3d::new(layer.kernel.clone(), b.clone()).unwrap(), &x)
        });
        assert!(rel_err(&grads.bias, &num_b) < 1e-4);
    }

    #[test]
    fn forward_is_linear_without_bias() {
        let layer = Conv3d::new(random_tensor::<f64>(&[3, 3, 3, 2, 2], 21), Tensor::zeros(&[2]).unwrap()).unwrap();
        let x = random_tensor::<f64>(&[1, 3, 4, 4, 2], 22);
        let y = random_tensor::<f64>(&[1, 3, 4, 4, 2], 23);
        let (a, b) = (0.7, -1.3);
        let lhs = layer.forward(&x.scale(a).add(&y.scale(b)).unwrap()).unwrap();
        let rhs = layer.forward(&x).unwrap().scale(a).add(&layer.forward(&y).unwrap().scale(b)).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-5);
    }
}
