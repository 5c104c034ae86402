//! Dense row-major tensors. 32-bit is the working precision; the 64-bit
//! instantiation exists for finite-difference gradient checks and runs the
//! identical code path.

use std::fmt::Debug;

pub trait Elem:
    num_traits::Float + num_traits::NumAssignOps + Debug + Default + Send + Sync + 'static
{
    const DTYPE: &'static str;
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn to_le_bytes(data: &[Self]) -> Vec<u8>;
    fn from_le_bytes(bytes: &[u8]) -> Option<Vec<Self>>;
}

impl Elem for f32 {
    const DTYPE: &'static str = "f32";
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn to_le_bytes(data: &[Self]) -> Vec<u8> {
        data.iter().flat_map(|v| v.to_le_bytes()).collect()
    }
    fn from_le_bytes(bytes: &[u8]) -> Option<Vec<Self>> {
        if bytes.len() % 4 != 0 {
            return None;
        }
        Some(
            bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        )
    }
}

impl Elem for f64 {
    const DTYPE: &'static str = "f64";
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn to_le_bytes(data: &[Self]) -> Vec<u8> {
        data.iter().flat_map(|v| v.to_le_bytes()).collect()
    }
    fn from_le_bytes(bytes: &[u8]) -> Option<Vec<Self>> {
        if bytes.len() % 8 != 0 {
            return None;
        }
        Some(
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<E> {
    shape: Vec<usize>,
    data: Vec<E>,
}

impl<E: Elem> Tensor<E> {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![E::zero(); n],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<E>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape {:?} does not match buffer length {}",
            shape,
            data.len()
        );
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn scalar(v: E) -> Self {
        Tensor {
            shape: vec![],
            data: vec![v],
        }
    }

    pub fn from_f64_slice(shape: &[usize], data: &[f64]) -> Self {
        Tensor::from_vec(shape, data.iter().map(|&v| E::from_f64(v)).collect())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[E] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [E] {
        &mut self.data
    }

    pub fn is_scalar(&self) -> bool {
        self.shape.is_empty()
    }

    pub fn item(&self) -> E {
        assert_eq!(self.numel(), 1, "item() on non-scalar tensor");
        self.data[0]
    }

    /// Length of the last axis.
    pub fn last_dim(&self) -> usize {
        *self.shape.last().expect("tensor has no axes")
    }

    /// Number of rows when the tensor is viewed as [rows, last_dim].
    pub fn leading(&self) -> usize {
        self.numel() / self.last_dim()
    }

    pub fn row(&self, i: usize) -> &[E] {
        let d = self.last_dim();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn fill(&mut self, v: E) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// Panics on NaN/Inf; every public op runs this on its output.
    pub fn assert_finite(&self, context: &str) {
        for &v in &self.data {
            if !v.is_finite() {
                panic!("non-finite value {v:?} produced by {context}");
            }
        }
    }
}

/// Decompose a shape around `axis` into (outer, len, inner) strides for
/// lane-wise reductions.
pub(crate) fn axis_lanes(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    assert!(axis < shape.len(), "axis {axis} out of rank {}", shape.len());
    let outer: usize = shape[..axis].iter().product();
    let len = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    (outer, len, inner)
}
