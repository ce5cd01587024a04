//! Dense row-major tensors.
//!
//! Storage is a flat `Vec` with the last axis varying fastest. Every
//! operation returns a fresh tensor; nothing mutates its inputs. There is
//! no broadcasting: mismatched shapes are errors.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{MatRef, Scalar};

pub const MAX_RANK: usize = 5;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() || dims.len() > MAX_RANK {
            return Err(Error::InvalidShape {
                reason: format!("rank must be 1..={MAX_RANK}"),
                dims,
            });
        }
        if dims.contains(&0) {
            return Err(Error::InvalidShape {
                reason: "every extent must be at least 1".into(),
                dims,
            });
        }
        if dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).is_none() {
            return Err(Error::InvalidShape {
                reason: "element count overflows".into(),
                dims,
            });
        }
        Ok(Self(dims))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    /// Row-major strides in elements.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.0.len()];
        for i in (0..self.0.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.0[i + 1];
        }
        strides
    }
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join("×"))
    }
}

impl std::ops::Index<usize> for Shape {
    type Output = usize;

    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

#[derive(Clone, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Shape,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOWN: usize = 8;
        write!(f, "Tensor({}, ", self.shape)?;
        if self.data.len() <= SHOWN {
            write!(f, "{:?})", self.data)
        } else {
            write!(f, "{:?}…)", &self.data[..SHOWN])
        }
    }
}

impl<T: Scalar> Tensor<T> {
    pub fn new(dims: &[usize], fill: T) -> Result<Self> {
        let shape = Shape::new(dims)?;
        let data = vec![fill; shape.numel()];
        Ok(Self { shape, data })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::new(dims, T::zero())
    }

    pub fn from_vec(dims: &[usize], data: Vec<T>) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if shape.numel() != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} elements cannot fill shape {shape}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn from_shape_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let shape = Shape::new(dims)?;
        let mut index = vec![0; shape.rank()];
        let mut data = Vec::with_capacity(shape.numel());
        for _ in 0..shape.numel() {
            data.push(f(&index));
            for axis in (0..index.len()).rev() {
                index[axis] += 1;
                if index[axis] < shape[axis] {
                    break;
                }
                index[axis] = 0;
            }
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn rank(&self) -> usize {
        self.shape.rank()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.rank(), "index rank mismatch");
        let mut off = 0;
        for (axis, (&i, &d)) in index.iter().zip(self.shape.dims()).enumerate() {
            assert!(i < d, "index {i} out of bounds for axis {axis} (extent {d})");
            off = off * d + i;
        }
        off
    }

    /// Element at a multi-index. Panics when out of bounds.
    pub fn at(&self, index: &[usize]) -> T {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: T) {
        let off = self.offset(index);
        self.data[off] = value;
    }

    pub fn reshape(&self, dims: &[usize]) -> Result<Self> {
        Self::from_vec(dims, self.data.clone())
    }

    pub fn into_reshaped(self, dims: &[usize]) -> Result<Self> {
        Self::from_vec(dims, self.data)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::from_f64(v.as_f64())).collect(),
        }
    }

    fn require_same_shape(&self, other: &Self, op: &str) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "{op}: {} vs {}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.require_same_shape(other, "add")?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.require_same_shape(other, "sub")?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn scale(&self, factor: T) -> Self {
        self.map(|v| v * factor)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest absolute elementwise difference; `None` when shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> Option<T> {
        if self.shape != other.shape {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| (a - b).abs())
                .fold(T::zero(), T::max),
        )
    }

    /// Reverses element order along `axis`.
    pub fn flip(&self, axis: usize) -> Result<Self> {
        let rank = self.rank();
        if axis >= rank {
            return Err(Error::Axis { axis, rank });
        }
        let dims = self.dims();
        let outer: usize = dims[..axis].iter().product();
        let extent = dims[axis];
        let inner: usize = dims[axis + 1..].iter().product();
        let mut data = Vec::with_capacity(self.data.len());
        for o in 0..outer {
            let base = o * extent * inner;
            for i in (0..extent).rev() {
                let start = base + i * inner;
                data.extend_from_slice(&self.data[start..start + inner]);
            }
        }
        Ok(Self {
            shape: self.shape.clone(),
            data,
        })
    }

    /// Pads every axis by `(before, after)` elements filled with `value`.
    pub fn pad(&self, before_after: &[(usize, usize)], value: T) -> Result<Self> {
        if before_after.len() != self.rank() {
            return Err(Error::ShapeMismatch(format!(
                "pad spec has {} axes, tensor has rank {}",
                before_after.len(),
                self.rank()
            )));
        }
        let new_dims: Vec<usize> = self
            .dims()
            .iter()
            .zip(before_after)
            .map(|(&d, &(b, a))| d + b + a)
            .collect();
        let mut out = Self::new(&new_dims, value)?;
        let offsets: Vec<usize> = before_after.iter().map(|&(b, _)| b).collect();
        out.copy_block_from(self, &offsets);
        Ok(out)
    }

    /// Extracts the block starting at `start` with extents `dims`. Inverse of [`pad`](Self::pad).
    pub fn crop(&self, start: &[usize], dims: &[usize]) -> Result<Self> {
        if start.len() != self.rank() || dims.len() != self.rank() {
            return Err(Error::ShapeMismatch("crop spec rank differs from tensor rank".into()));
        }
        for axis in 0..self.rank() {
            if start[axis] + dims[axis] > self.dims()[axis] {
                return Err(Error::ShapeMismatch(format!(
                    "crop window {}+{} exceeds extent {} on axis {axis}",
                    start[axis],
                    dims[axis],
                    self.dims()[axis]
                )));
            }
        }
        let shape = Shape::new(dims)?;
        let mut data = Vec::with_capacity(shape.numel());
        let last = self.rank() - 1;
        let src_strides = self.shape.strides();
        for_each_row(dims, |row| {
            let src: usize = row
                .iter()
                .zip(start)
                .zip(&src_strides)
                .map(|((&r, &s), &st)| (r + s) * st)
                .sum();
            data.extend_from_slice(&self.data[src..src + dims[last]]);
        });
        Ok(Self { shape, data })
    }

    fn copy_block_from(&mut self, block: &Self, offsets: &[usize]) {
        let dst_strides = self.shape.strides();
        let last = block.rank() - 1;
        let row_len = block.dims()[last];
        let mut src = 0;
        for_each_row(block.dims(), |row| {
            let dst: usize = row
                .iter()
                .zip(offsets)
                .zip(&dst_strides)
                .map(|((&r, &o), &st)| (r + o) * st)
                .sum();
            self.data[dst..dst + row_len].copy_from_slice(&block.data[src..src + row_len]);
            src += row_len;
        });
    }

    /// Matrix product of two rank-2 tensors.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.rank() != 2 || other.rank() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "matmul needs rank-2 operands, got {} and {}",
                self.shape, other.shape
            )));
        }
        let (m, k) = (self.dims()[0], self.dims()[1]);
        let (k2, n) = (other.dims()[0], other.dims()[1]);
        if k != k2 {
            return Err(Error::ShapeMismatch(format!(
                "matmul inner extents differ: {} · {}",
                self.shape, other.shape
            )));
        }
        let mut out = vec![T::zero(); m * n];
        T::gemm(
            MatRef::row_major(&self.data, m, k),
            MatRef::row_major(&other.data, k, n),
            T::zero(),
            &mut out,
        );
        Self::from_vec(&[m, n], out)
    }

    pub fn transpose2(&self) -> Result<Self> {
        if self.rank() != 2 {
            return Err(Error::ShapeMismatch(format!("transpose needs rank 2, got {}", self.shape)));
        }
        let (r, c) = (self.dims()[0], self.dims()[1]);
        let mut data = Vec::with_capacity(r * c);
        for j in 0..c {
            for i in 0..r {
                data.push(self.data[i * c + j]);
            }
        }
        Self::from_vec(&[c, r], data)
    }

    /// Index of the largest element of each row of a rank-2 tensor (first wins on ties).
    pub fn argmax_rows(&self) -> Vec<usize> {
        let cols = *self.dims().last().unwrap();
        self.data
            .chunks(cols)
            .map(|row| {
                let mut best = 0;
                for (i, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = i;
                    }
                }
                best
            })
            .collect()
    }

    /// Sub-tensor at position `i` of the leading axis, with that axis dropped.
    pub fn outer(&self, i: usize) -> Result<Self> {
        let dims = self.dims();
        if dims.len() < 2 || i >= dims[0] {
            return Err(Error::ShapeMismatch(format!("no outer slice {i} in {}", self.shape)));
        }
        let inner: usize = dims[1..].iter().product();
        Self::from_vec(&dims[1..], self.data[i * inner..(i + 1) * inner].to_vec())
    }

    /// Stacks equally shaped tensors along a new leading axis.
    pub fn stack(items: &[&Self]) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::ShapeMismatch("cannot stack zero tensors".into()))?;
        let mut dims = vec![items.len()];
        dims.extend_from_slice(first.dims());
        let mut data = Vec::with_capacity(first.numel() * items.len());
        for t in items {
            first.require_same_shape(t, "stack")?;
            data.extend_from_slice(&t.data);
        }
        Self::from_vec(&dims, data)
    }
}

/// Calls `f` once per innermost row of `dims`, passing the row's leading index
/// (the last component is always 0).
fn for_each_row(dims: &[usize], mut f: impl FnMut(&[usize])) {
    let rank = dims.len();
    let rows: usize = dims[..rank - 1].iter().product();
    let mut index = vec![0; rank];
    for _ in 0..rows {
        f(&index);
        for axis in (0..rank - 1).rev() {
            index[axis] += 1;
            if index[axis] < dims[axis] {
                break;
            }
            index[axis] = 0;
        }
    }
}

const VTEN_MAGIC: &[u8; 4] = b"VTN1";

impl Tensor<f32> {
    /// Serializes to the `.vten` container: magic, rank byte, u32 LE extents, f32 LE payload.
    pub fn write_vten(&self, mut w: impl Write) -> Result<()> {
        let mut buf = Vec::with_capacity(5 + 4 * self.rank() + 4 * self.numel());
        buf.extend_from_slice(VTEN_MAGIC);
        buf.push(self.rank() as u8);
        for &d in self.dims() {
            let d = u32::try_from(d).map_err(|_| Error::format("extent", format!("{d} exceeds u32")))?;
            buf.extend_from_slice(&d.to_le_bytes());
        }
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_vten(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::decode_vten(&bytes)
    }

    pub fn decode_vten(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 5 {
            return Err(Error::format("header", "file shorter than magic + rank"));
        }
        if &bytes[..4] != VTEN_MAGIC {
            return Err(Error::format("magic", format!("expected VTN1, found {:?}", &bytes[..4])));
        }
        let rank = bytes[4] as usize;
        let mut pos = 5;
        let mut dims = Vec::with_capacity(rank);
        for axis in 0..rank {
            let chunk = bytes
                .get(pos..pos + 4)
                .ok_or_else(|| Error::format(format!("extent[{axis}]"), "truncated"))?;
            dims.push(u32::from_le_bytes(chunk.try_into().unwrap()) as usize);
            pos += 4;
        }
        let shape = Shape::new(dims).map_err(|e| Error::format("extents", e.to_string()))?;
        let payload = &bytes[pos..];
        if payload.len() != 4 * shape.numel() {
            return Err(Error::format(
                "payload",
                format!("expected {} bytes, found {}", 4 * shape.numel(), payload.len()),
            ));
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { shape, data })
    }

    pub fn save_vten(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_vten(std::io::BufWriter::new(file))
    }

    pub fn load_vten(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode_vten(&std::fs::read(path)?)
    }
}
