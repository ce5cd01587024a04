//! Element types a [`Tensor`](crate::Tensor) can hold.
//!
//! `f32` is the working precision. `f64` exists so gradient checks can run
//! central finite differences without drowning in rounding noise.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::Float;

/// Strided view of a row-major-or-not matrix used by [`Scalar::gemm`].
#[derive(Clone, Copy, Debug)]
pub struct MatRef<'a, T> {
    pub data: &'a [T],
    pub rows: usize,
    pub cols: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl<'a, T> MatRef<'a, T> {
    pub fn row_major(data: &'a [T], rows: usize, cols: usize) -> Self {
        Self {
            data,
            rows,
            cols,
            row_stride: cols,
            col_stride: 1,
        }
    }

    /// The same storage read as its transpose.
    pub fn t(self) -> Self {
        Self {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            row_stride: self.col_stride,
            col_stride: self.row_stride,
        }
    }

    fn max_index(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride
    }
}

pub trait Scalar:
    Float + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Number of bytes of the IEEE-754 encoding.
    const BYTES: usize;

    /// `c = a·b + beta·c` for row-major `c` of shape `a.rows × b.cols`.
    fn gemm(a: MatRef<'_, Self>, b: MatRef<'_, Self>, beta: Self, c: &mut [Self]);

    fn from_f64(v: f64) -> Self;

    fn as_f64(self) -> f64;
}

fn check_gemm<T>(a: &MatRef<'_, T>, b: &MatRef<'_, T>, c: &[T]) {
    assert_eq!(a.cols, b.rows, "gemm inner extents differ");
    assert!(a.rows == 0 || a.cols == 0 || a.max_index() < a.data.len());
    assert!(b.rows == 0 || b.cols == 0 || b.max_index() < b.data.len());
    assert!(c.len() >= a.rows * b.cols);
}

impl Scalar for f32 {
    const BYTES: usize = 4;

    fn gemm(a: MatRef<'_, f32>, b: MatRef<'_, f32>, beta: f32, c: &mut [f32]) {
        check_gemm(&a, &b, c);
        if a.rows == 0 || b.cols == 0 {
            return;
        }
        // SAFETY: the extents and strides were bounds-checked against every slice above.
        unsafe {
            matrixmultiply::sgemm(
                a.rows,
                a.cols,
                b.cols,
                1.0,
                a.data.as_ptr(),
                a.row_stride as isize,
                a.col_stride as isize,
                b.data.as_ptr(),
                b.row_stride as isize,
                b.col_stride as isize,
                beta,
                c.as_mut_ptr(),
                b.cols as isize,
                1,
            );
        }
    }

    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    const BYTES: usize = 8;

    fn gemm(a: MatRef<'_, f64>, b: MatRef<'_, f64>, beta: f64, c: &mut [f64]) {
        check_gemm(&a, &b, c);
        if a.rows == 0 || b.cols == 0 {
            return;
        }
        // SAFETY: see the f32 impl.
        unsafe {
            matrixmultiply::dgemm(
                a.rows,
                a.cols,
                b.cols,
                1.0,
                a.data.as_ptr(),
                a.row_stride as isize,
                a.col_stride as isize,
                b.data.as_ptr(),
                b.row_stride as isize,
                b.col_stride as isize,
                beta,
                c.as_mut_ptr(),
                b.cols as isize,
                1,
            );
        }
    }

    fn from_f64(v: f64) -> Self {
        v
    }

    fn as_f64(self) -> f64 {
        self
    }
}
