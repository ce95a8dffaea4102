use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major array. Most operations expect rank 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::shape(format!("zero-sized dimension in {shape:?}")));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::shape(format!(
                "shape {shape:?} needs {expected} entries, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            shape: vec![rows, cols],
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Tensor {
            shape: vec![rows, cols],
            data,
        }
    }

    /// Lifts an `f64` tensor into this scalar type as constants.
    pub fn lift(other: &Tensor<f64>) -> Self {
        Tensor {
            shape: other.shape.clone(),
            data: other.data.iter().map(|&x| T::cst(x)).collect(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn values(&self) -> Tensor<f64> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| x.value()).collect(),
        }
    }

    fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            s => Err(Error::shape(format!("expected a matrix, got shape {s:?}"))),
        }
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape.get(1).copied().unwrap_or(1)
    }

    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols() + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn transpose(&self) -> Result<Self> {
        let (r, c) = self.dims2()?;
        Ok(Tensor::from_fn(c, r, |i, j| self.data[j * c + i]))
    }

    pub fn matmul(&self, rhs: &Tensor<T>) -> Result<Self> {
        let (m, k) = self.dims2()?;
        let (k2, n) = rhs.dims2()?;
        if k != k2 {
            return Err(Error::shape(format!(
                "matmul {:?} x {:?}",
                self.shape, rhs.shape
            )));
        }
        let rt = rhs.transpose()?;
        let mut data = Vec::with_capacity(m * n);
        for i in 0..m {
            let a = &self.data[i * k..(i + 1) * k];
            for j in 0..n {
                data.push(T::dot(a, &rt.data[j * k..(j + 1) * k]));
            }
        }
        Tensor::matrix(m, n, data)
    }

    fn zip_with(&self, rhs: &Tensor<T>, what: &str, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape == rhs.shape {
            let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect();
            return Ok(Tensor {
                shape: self.shape.clone(),
                data,
            });
        }
        // Row broadcast of a 1 x c operand.
        let (r, c) = self.dims2()?;
        if rhs.shape == [1, c] {
            let data = (0..r * c).map(|i| f(self.data[i], rhs.data[i % c])).collect();
            return Ok(Tensor {
                shape: self.shape.clone(),
                data,
            });
        }
        Err(Error::shape(format!(
            "{what} {:?} with {:?}",
            self.shape, rhs.shape
        )))
    }

    /// Elementwise sum; a `1 x c` right operand is broadcast over rows.
    pub fn add(&self, rhs: &Tensor<T>) -> Result<Self> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Tensor<T>) -> Result<Self> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    pub fn hadamard(&self, rhs: &Tensor<T>) -> Result<Self> {
        self.zip_with(rhs, "hadamard", |a, b| a * b)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn sigmoid(&self) -> Self {
        self.map(T::sigmoid)
    }

    pub fn tanh(&self) -> Self {
        self.map(T::tanh)
    }

    pub fn relu(&self) -> Self {
        self.map(T::relu)
    }

    pub fn square(&self) -> Self {
        self.map(|x| x * x)
    }

    pub fn reciprocal(&self) -> Self {
        self.map(T::recip)
    }

    /// Softmax along each row, shifted by the row maximum for stability.
    pub fn row_softmax(&self) -> Result<Self> {
        let (r, c) = self.dims2()?;
        let mut data = Vec::with_capacity(r * c);
        for i in 0..r {
            let row = &self.data[i * c..(i + 1) * c];
            let shift = row.iter().map(|x| x.value()).fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<T> = row.iter().map(|&x| (x - T::cst(shift)).exp()).collect();
            let inv = T::sum(&exps).recip();
            data.extend(exps.into_iter().map(|e| e * inv));
        }
        Tensor::matrix(r, c, data)
    }

    pub fn sum(&self) -> T {
        T::sum(&self.data)
    }

    pub fn mean(&self) -> T {
        self.sum() * T::cst(1.0 / self.data.len() as f64)
    }

    /// Column-wise concatenation of two matrices with equal row counts.
    pub fn concat_cols(&self, rhs: &Tensor<T>) -> Result<Self> {
        let (r, c1) = self.dims2()?;
        let (r2, c2) = rhs.dims2()?;
        if r != r2 {
            return Err(Error::shape(format!(
                "concat {:?} with {:?}",
                self.shape, rhs.shape
            )));
        }
        let mut data = Vec::with_capacity(r * (c1 + c2));
        for i in 0..r {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(rhs.row(i));
        }
        Tensor::matrix(r, c1 + c2, data)
    }

    /// Mean over rows, giving a `1 x c` matrix.
    pub fn row_mean(&self) -> Result<Self> {
        let (r, c) = self.dims2()?;
        let inv = T::cst(1.0 / r as f64);
        let cols = self.transpose()?;
        let data = (0..c)
            .map(|j| T::sum(&cols.data[j * r..(j + 1) * r]) * inv)
            .collect();
        Tensor::matrix(1, c, data)
    }
}
