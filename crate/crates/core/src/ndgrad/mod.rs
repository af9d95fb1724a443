//! Dense `f64` matrices with a reverse-mode gradient tape.
//!
//! Values live in [`Tensor`]s. A forward pass records operations on a
//! [`Tape`]; [`Tape::backward`] walks the recording in reverse and
//! returns a gradient for every node. Trainable parameters are kept in a
//! [`ParamStore`] and enter a tape as leaves through [`Tape::param`].

mod adam;
mod tape;

pub use adam::{Adam, AdamConfig};
pub use tape::{Gradients, Tape, Var};

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("shape mismatch in {op}: {detail}")]
pub struct ShapeError {
    pub op: &'static str,
    pub detail: String,
}

impl ShapeError {
    pub(crate) fn new(op: &'static str, detail: String) -> Self {
        ShapeError { op, detail }
    }
}

/// Dense row-major array. Tape operations work on rank-2 tensors only.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, ShapeError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(ShapeError::new("tensor", format!("shape {shape:?} needs {expected} values, got {}", data.len())));
        }
        Ok(Tensor { shape, data })
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Tensor { shape: vec![rows, cols], data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor::matrix(rows, cols, vec![0.0; rows * cols])
    }

    pub fn zeros_like(other: &Tensor) -> Self {
        Tensor { shape: other.shape.clone(), data: vec![0.0; other.data.len()] }
    }

    pub fn row(data: Vec<f64>) -> Self {
        let n = data.len();
        Tensor::matrix(1, n, data)
    }

    pub fn scalar(value: f64) -> Self {
        Tensor::matrix(1, 1, vec![value])
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Tensor::matrix(rows.len(), cols, data)
    }

    /// Xavier/Glorot uniform initialisation.
    pub fn xavier<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let limit = libm::sqrt(6.0 / (rows + cols) as f64);
        let data = (0..rows * cols).map(|_| rng.random_range(-limit..limit)).collect();
        Tensor::matrix(rows, cols, data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(1)
    }

    pub fn cols(&self) -> usize {
        if self.shape.len() >= 2 {
            self.shape[1..].iter().product()
        } else {
            self.shape.first().copied().unwrap_or(1)
        }
    }

    pub fn is_matrix(&self) -> bool {
        self.shape.len() == 2
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols() + c]
    }

    pub fn row_slice(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    /// The single value of a 1×1 tensor.
    pub fn item(&self) -> f64 {
        self.data[0]
    }

    pub fn transpose(&self) -> Tensor {
        let (r, c) = (self.rows(), self.cols());
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = self.data[i * c + j];
            }
        }
        Tensor::matrix(c, r, out)
    }

    pub(crate) fn add_assign(&mut self, other: &Tensor) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// Dense matrix product `a · b` without shape checks beyond debug asserts.
pub(crate) fn matmul_raw(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(b.len(), k * m);
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let row = &mut out[i * m..(i + 1) * m];
        for p in 0..k {
            let x = a[i * k + p];
            if x == 0.0 {
                continue;
            }
            let brow = &b[p * m..(p + 1) * m];
            for (o, y) in row.iter_mut().zip(brow) {
                *o += x * y;
            }
        }
    }
    out
}

/// Handle to a tensor in a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("duplicate parameter name {0}")]
pub struct DuplicateParam(pub String);

/// Named trainable tensors in registration order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    entries: Vec<(String, Tensor)>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, value: Tensor) -> Result<ParamId, DuplicateParam> {
        if self.id(name).is_some() {
            return Err(DuplicateParam(name.into()));
        }
        self.entries.push((name.into(), value));
        Ok(ParamId(self.entries.len() - 1))
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.entries.iter().position(|(n, _)| n == name).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].1
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].1
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].0
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor)> {
        self.entries.iter().enumerate().map(|(i, (n, t))| (ParamId(i), n.as_str(), t))
    }

    pub fn num_values(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }
}
