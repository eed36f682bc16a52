//! Dense rank-4 tensors and the primitives the adaptation layers are built from.
//!
//! Storage is row-major with batch outermost and width innermost. Every public
//! operation returns a tensor whose elements are all finite, or an error.

mod conv;

pub use conv::{conv2d_backward, conv2d_forward, conv2d_grad_input, conv2d_grad_params, Conv2dParams};

use crate::error::{Error, Result};

/// `(batch, channels, height, width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub batch: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub const fn new(batch: usize, channels: usize, height: usize, width: usize) -> Self {
        Shape {
            batch,
            channels,
            height,
            width,
        }
    }

    pub const fn len(&self) -> usize {
        self.batch * self.channels * self.height * self.width
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn plane(&self) -> usize {
        self.height * self.width
    }

    pub const fn dims(&self) -> [usize; 4] {
        [self.batch, self.channels, self.height, self.width]
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}x{}x{}x{}",
            self.batch, self.channels, self.height, self.width
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    shape: Shape,
    data: Vec<f64>,
}

impl Tensor4 {
    /// Builds a tensor, checking that every dimension is at least one, that the
    /// buffer length matches, and that all values are finite.
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if shape.dims().contains(&0) {
            return Err(Error::InvalidTensor(format!("zero-sized dimension in {shape}")));
        }
        if data.len() != shape.len() {
            return Err(Error::InvalidTensor(format!(
                "buffer of {} values for shape {shape}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Tensor4::new"));
        }
        Ok(Tensor4 { shape, data })
    }

    pub fn zeros(shape: Shape) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn ones(shape: Shape) -> Self {
        Self::full(shape, 1.0)
    }

    pub fn full(shape: Shape, value: f64) -> Self {
        assert!(
            shape.dims().iter().all(|&d| d > 0) && value.is_finite(),
            "invalid tensor {shape} filled with {value}"
        );
        Tensor4 {
            shape,
            data: vec![value; shape.len()],
        }
    }

    /// Single-image, single-channel tensor from a `height x width` grid.
    pub fn from_plane(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(Shape::new(1, 1, height, width), data)
    }

    /// Wraps a buffer produced internally; values are checked for finiteness.
    pub(crate) fn checked(shape: Shape, data: Vec<f64>, op: &'static str) -> Result<Self> {
        debug_assert_eq!(data.len(), shape.len());
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(op));
        }
        Ok(Tensor4 { shape, data })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Mutable access for callers that keep values finite themselves
    /// (optimizers, finite-difference probes).
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn index(&self, b: usize, c: usize, y: usize, x: usize) -> usize {
        let s = self.shape;
        ((b * s.channels + c) * s.height + y) * s.width + x
    }

    pub fn get(&self, b: usize, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.index(b, c, y, x)]
    }

    /// Channel `c` of batch item `b` as a contiguous `height * width` slice.
    pub fn plane(&self, b: usize, c: usize) -> &[f64] {
        let p = self.shape.plane();
        let start = (b * self.shape.channels + c) * p;
        &self.data[start..start + p]
    }

    fn ensure_same_shape(&self, other: &Tensor4, op: &str) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "{op}: {} vs {}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    pub fn map(&self, op: &'static str, f: impl Fn(f64) -> f64) -> Result<Tensor4> {
        Self::checked(self.shape, self.data.iter().map(|&v| f(v)).collect(), op)
    }

    pub fn zip_map(
        &self,
        other: &Tensor4,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor4> {
        self.ensure_same_shape(other, op)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::checked(self.shape, data, op)
    }

    pub fn add(&self, other: &Tensor4) -> Result<Tensor4> {
        self.zip_map(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor4) -> Result<Tensor4> {
        self.zip_map(other, "sub", |a, b| a - b)
    }

    pub fn mul(&self, other: &Tensor4) -> Result<Tensor4> {
        self.zip_map(other, "mul", |a, b| a * b)
    }

    pub fn scale(&self, factor: f64) -> Result<Tensor4> {
        self.map("scale", |v| v * factor)
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &Tensor4) -> Result<()> {
        self.ensure_same_shape(other, "add_assign")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("add_assign"));
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn dot(&self, other: &Tensor4) -> Result<f64> {
        self.ensure_same_shape(other, "dot")?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }
}

#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(input: &Tensor4) -> Result<Tensor4> {
    input.map("sigmoid", sigmoid_scalar)
}

pub fn tanh_act(input: &Tensor4) -> Result<Tensor4> {
    input.map("tanh", f64::tanh)
}

pub fn relu(input: &Tensor4) -> Result<Tensor4> {
    input.map("relu", |v| v.max(0.0))
}

/// `grad_out * s * (1 - s)` where `s = sigmoid(input)`.
pub fn sigmoid_backward(input: &Tensor4, grad_out: &Tensor4) -> Result<Tensor4> {
    let out = sigmoid(input)?;
    sigmoid_backward_from_output(&out, grad_out)
}

/// Same as [`sigmoid_backward`] but reuses the cached activation.
pub fn sigmoid_backward_from_output(output: &Tensor4, grad_out: &Tensor4) -> Result<Tensor4> {
    output.zip_map(grad_out, "sigmoid_backward", |s, g| g * s * (1.0 - s))
}

/// `grad_out * (1 - tanh(input)^2)`.
pub fn tanh_backward(input: &Tensor4, grad_out: &Tensor4) -> Result<Tensor4> {
    let out = tanh_act(input)?;
    tanh_backward_from_output(&out, grad_out)
}

pub fn tanh_backward_from_output(output: &Tensor4, grad_out: &Tensor4) -> Result<Tensor4> {
    output.zip_map(grad_out, "tanh_backward", |t, g| g * (1.0 - t * t))
}

/// Subgradient 0 at the kink.
pub fn relu_backward(input: &Tensor4, grad_out: &Tensor4) -> Result<Tensor4> {
    input.zip_map(grad_out, "relu_backward", |x, g| if x > 0.0 { g } else { 0.0 })
}
