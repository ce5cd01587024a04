//! 3D max pooling with optional ceil-mode output rounding.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pool3dConfig {
    /// `(wt, wh, ww)`
    pub window: [usize; 3],
    /// `(st, sh, sw)`
    pub stride: [usize; 3],
    pub ceil_mode: bool,
}

/// Winning input offsets from a forward pass, consumed by [`maxpool3d_backward`].
#[derive(Clone, Debug, PartialEq)]
pub struct ArgmaxRecord {
    pub input_dims: Vec<usize>,
    pub output_dims: Vec<usize>,
    pub indices: Vec<usize>,
}

impl Pool3dConfig {
    pub fn new(window: [usize; 3], stride: [usize; 3], ceil_mode: bool) -> Result<Self> {
        if window.iter().chain(&stride).any(|&v| v == 0) {
            return Err(Error::Config(format!(
                "pool window {window:?} and stride {stride:?} must be at least 1"
            )));
        }
        Ok(Self {
            window,
            stride,
            ceil_mode,
        })
    }

    /// Window and stride 2 on all three axes, ceil mode.
    pub fn cube2() -> Self {
        Self::new([2, 2, 2], [2, 2, 2], true).unwrap()
    }

    /// Window and stride `1×2×2`, ceil mode.
    pub fn spatial2() -> Self {
        Self::new([1, 2, 2], [1, 2, 2], true).unwrap()
    }

    fn axis_extent(&self, input: usize, axis: usize) -> Result<usize> {
        let (win, stride) = (self.window[axis], self.stride[axis]);
        if input < win {
            if self.ceil_mode {
                return Ok(1);
            }
            return Err(Error::ShapeMismatch(format!(
                "pool window {win} exceeds input extent {input} on axis {axis}"
            )));
        }
        let span = input - win;
        if !self.ceil_mode {
            return Ok(span / stride + 1);
        }
        let out = span.div_ceil(stride) + 1;
        // the last window has to start inside the input
        Ok(if (out - 1) * stride >= input { out - 1 } else { out })
    }

    pub fn output_dims(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input.len() != 5 {
            return Err(Error::ShapeMismatch(format!("maxpool3d input must be rank 5, got {input:?}")));
        }
        Ok(vec![
            input[0],
            self.axis_extent(input[1], 0)?,
            self.axis_extent(input[2], 1)?,
            self.axis_extent(input[3], 2)?,
            input[4],
        ])
    }
}

pub fn maxpool3d_forward<T: Scalar>(cfg: &Pool3dConfig, x: &Tensor<T>) -> Result<(Tensor<T>, ArgmaxRecord)> {
    let out_dims = cfg.output_dims(x.dims())?;
    let [n, t, h, w, c] = <[usize; 5]>::try_from(x.dims()).unwrap();
    let [_, ot, oh, ow, _] = <[usize; 5]>::try_from(out_dims.as_slice()).unwrap();
    let data = x.data();
    let numel = out_dims.iter().product();
    let mut out = Vec::with_capacity(numel);
    let mut indices = Vec::with_capacity(numel);
    let mut best_val = vec![T::zero(); c];
    let mut best_idx = vec![0usize; c];

    for b in 0..n {
        for i in 0..ot {
            let t0 = i * cfg.stride[0];
            let t1 = (t0 + cfg.window[0]).min(t);
            for j in 0..oh {
                let h0 = j * cfg.stride[1];
                let h1 = (h0 + cfg.window[1]).min(h);
                for k in 0..ow {
                    let w0 = k * cfg.stride[2];
                    let w1 = (w0 + cfg.window[2]).min(w);
                    let mut first = true;
                    // increasing (t, h, w) is increasing flat index, so strict `>` keeps the first max
                    for st in t0..t1 {
                        for sh in h0..h1 {
                            for sw in w0..w1 {
                                let base = (((b * t + st) * h + sh) * w + sw) * c;
                                for ch in 0..c {
                                    let v = data[base + ch];
                                    if first || v > best_val[ch] {
                                        best_val[ch] = v;
                                        best_idx[ch] = base + ch;
                                    }
                                }
                                first = false;
                            }
                        }
                    }
                    out.extend_from_slice(&best_val);
                    indices.extend_from_slice(&best_idx);
                }
            }
        }
    }
    let record = ArgmaxRecord {
        input_dims: x.dims().to_vec(),
        output_dims: out_dims.clone(),
        indices,
    };
    Ok((Tensor::from_vec(&out_dims, out)?, record))
}

pub fn maxpool3d_backward<T: Scalar>(record: &ArgmaxRecord, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if grad_out.dims() != record.output_dims.as_slice() {
        return Err(Error::ShapeMismatch(format!(
            "maxpool3d grad_out {} does not match recorded output {:?}",
            grad_out.shape(),
            record.output_dims
        )));
    }
    let mut grad = Tensor::zeros(&record.input_dims)?;
    let gdata = grad.data_mut();
    for (&idx, &g) in record.indices.iter().zip(grad_out.data()) {
        gdata[idx] = gdata[idx] + g;
    }
    Ok(grad)
}
