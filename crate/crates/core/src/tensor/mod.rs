//! Dense n-dimensional arrays.
//!
//! `Tensor<T>` is the value carrier for every layer in the crate: a shape
//! vector plus a flat row-major buffer (the last axis varies fastest). The
//! element type is `f32` in normal use; the gradient-check harness
//! instantiates everything at `f64` because central differences at `f32`
//! are too noisy for the error bounds asserted in tests.
//!
//! All reductions run in a fixed left-to-right order so results are
//! reproducible bit-for-bit across runs and thread counts.

pub mod gradcheck;
pub mod rng;

use crate::error::{Error, Result};

/// Element type for tensors: `f32` for weights/activations, `f64` for the
/// finite-difference harness.
pub trait Scalar:
    num_traits::Float + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

/// Dense n-dimensional array in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    /// Builds a tensor from a shape and flat row-major data.
    pub fn from_vec(shape: impl Into<Vec<usize>>, data: Vec<T>) -> Result<Self> {
        let shape = shape.into();
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::shape(
                "from_vec",
                format!("dimensions must be positive, got {shape:?}"),
            ));
        }
        let expect: usize = shape.iter().product();
        if expect != data.len() {
            return Err(Error::shape(
                "from_vec",
                format!("shape {shape:?} wants {expect} elements, got {}", data.len()),
            ));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: impl Into<Vec<usize>>) -> Self {
        let shape = shape.into();
        let n: usize = shape.iter().product();
        Tensor {
            shape,
            data: vec![T::zero(); n],
        }
    }

    pub fn filled(shape: impl Into<Vec<usize>>, value: T) -> Self {
        let shape = shape.into();
        let n: usize = shape.iter().product();
        Tensor {
            shape,
            data: vec![value; n],
        }
    }

    /// Identity matrix of size n.
    pub fn eye(n: usize) -> Self {
        let mut t = Tensor::zeros([n, n]);
        for i in 0..n {
            t.data[i * n + i] = T::one();
        }
        t
    }

    pub fn scalar(value: T) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![value],
        }
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> Result<T> {
        if self.data.len() != 1 {
            return Err(Error::shape(
                "item",
                format!("expected one element, shape is {:?}", self.shape),
            ));
        }
        Ok(self.data[0])
    }

    /// Reinterprets the buffer under a new shape with the same element count.
    pub fn reshape(mut self, shape: impl Into<Vec<usize>>) -> Result<Self> {
        let shape = shape.into();
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(Error::shape(
                "reshape",
                format!("cannot reshape {:?} into {shape:?}", self.shape),
            ));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Tensor<T> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip(&self, other: &Tensor<T>, op: &'static str, f: impl Fn(T, T) -> T) -> Result<Tensor<T>> {
        if self.shape != other.shape {
            return Err(Error::shape(
                op,
                format!("{:?} vs {:?}", self.shape, other.shape),
            ));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        self.zip(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        self.zip(other, "sub", |a, b| a - b)
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        self.zip(other, "mul", |a, b| a * b)
    }

    pub fn scale(&self, factor: T) -> Tensor<T> {
        self.map(|v| v * factor)
    }

    pub fn sigmoid(&self) -> Tensor<T> {
        self.map(sigmoid)
    }

    pub fn tanh(&self) -> Tensor<T> {
        self.map(|v| v.tanh())
    }

    pub fn leaky_relu(&self, slope: T) -> Tensor<T> {
        self.map(|v| leaky_relu(v, slope))
    }

    /// Sum of all elements, accumulated left to right.
    pub fn sum(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc + v)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// In-place `self += other`, used by gradient accumulators.
    pub fn add_assign(&mut self, other: &Tensor<T>) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::shape(
                "add_assign",
                format!("{:?} vs {:?}", self.shape, other.shape),
            ));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
        Ok(())
    }

    /// Converts the element type, rounding through `f64`.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::from_f64(v.to_f64())).collect(),
        }
    }
}

#[inline]
pub fn sigmoid<T: Scalar>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

#[inline]
pub fn leaky_relu<T: Scalar>(v: T, slope: T) -> T {
    if v >= T::zero() {
        v
    } else {
        slope * v
    }
}

/// Matrix product of `a: [m×k]` and `b: [k×n]`.
///
/// The contraction over `k` runs left to right for every output element, so
/// the result is deterministic.
pub fn matmul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (m, k) = match a.shape() {
        [m, k] => (*m, *k),
        s => return Err(Error::shape("matmul", format!("lhs must be 2-d, got {s:?}"))),
    };
    let (k2, n) = match b.shape() {
        [k2, n] => (*k2, *n),
        s => return Err(Error::shape("matmul", format!("rhs must be 2-d, got {s:?}"))),
    };
    if k != k2 {
        return Err(Error::shape(
            "matmul",
            format!("inner dimensions disagree: [{m}x{k}] vs [{k2}x{n}]"),
        ));
    }
    let mut out = vec![T::zero(); m * n];
    for i in 0..m {
        let row = &a.data[i * k..(i + 1) * k];
        let out_row = &mut out[i * n..(i + 1) * n];
        for (kk, &av) in row.iter().enumerate() {
            let b_row = &b.data[kk * n..(kk + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o = *o + av * bv;
            }
        }
    }
    Tensor::from_vec(vec![m, n], out)
}

/// `w[rows×cols] · v[cols]`, row dot products accumulated left to right.
pub fn matvec<T: Scalar>(w: &Tensor<T>, v: &[T]) -> Result<Vec<T>> {
    let (rows, cols) = match w.shape() {
        [r, c] => (*r, *c),
        s => return Err(Error::shape("matvec", format!("matrix must be 2-d, got {s:?}"))),
    };
    if cols != v.len() {
        return Err(Error::shape(
            "matvec",
            format!("[{rows}x{cols}] vs vector of length {}", v.len()),
        ));
    }
    let mut out = Vec::with_capacity(rows);
    for r in 0..rows {
        out.push(dot(&w.data[r * cols..(r + 1) * cols], v));
    }
    Ok(out)
}

/// `wᵀ · u` for `w[rows×cols]`, accumulating over rows in ascending order.
pub fn matvec_transposed<T: Scalar>(w: &Tensor<T>, u: &[T]) -> Result<Vec<T>> {
    let (rows, cols) = match w.shape() {
        [r, c] => (*r, *c),
        s => return Err(Error::shape("matvec_t", format!("matrix must be 2-d, got {s:?}"))),
    };
    if rows != u.len() {
        return Err(Error::shape(
            "matvec_t",
            format!("[{rows}x{cols}] vs vector of length {}", u.len()),
        ));
    }
    let mut out = vec![T::zero(); cols];
    for (r, &uv) in u.iter().enumerate() {
        let row = &w.data[r * cols..(r + 1) * cols];
        for (o, &wv) in out.iter_mut().zip(row) {
            *o = *o + wv * uv;
        }
    }
    Ok(out)
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc = acc + x * y;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_identity_is_exact() {
        let a = Tensor::from_vec([2, 2], vec![1.0f64, 2.0, 3.0, 4.0]).unwrap();
        let i = Tensor::eye(2);
        assert_eq!(matmul(&a, &i).unwrap(), a);
        let col = Tensor::from_vec([2, 1], vec![5.0f64, 7.0]).unwrap();
        assert_eq!(matmul(&i, &col).unwrap(), col);
    }

    #[test]
    fn matmul_hand_computed() {
        let a = Tensor::from_vec([2, 2], vec![1.0f64, 2.0, 3.0, 4.0]).unwrap();
        let ones = Tensor::from_vec([2, 1], vec![1.0f64, 1.0]).unwrap();
        let got = matmul(&a, &ones).unwrap();
        assert_eq!(got.data(), &[3.0, 7.0]);
    }

    #[test]
    fn matmul_mismatch_names_both_shapes() {
        let a = Tensor::<f32>::zeros([2, 3]);
        let b = Tensor::<f32>::zeros([2, 2]);
        let err = matmul(&a, &b).unwrap_err().to_string();
        assert!(err.contains("2x3") && err.contains("2x2"), "{err}");
    }

    #[test]
    fn elementwise_fixed_points() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert_eq!(0.0f64.tanh(), 0.0);
        assert_eq!(leaky_relu(-2.0f64, 0.01), -0.02);
        assert_eq!(leaky_relu(3.0f64, 0.01), 3.0);
    }

    #[test]
    fn elementwise_shape_mismatch() {
        let a = Tensor::<f32>::zeros([2]);
        let b = Tensor::<f32>::zeros([3]);
        assert!(a.add(&b).is_err());
        assert!(a.mul(&b).is_err());
    }

    #[test]
    fn matvec_agrees_with_matmul() {
        let w = Tensor::from_vec([2, 3], vec![1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let v = [1.0f64, 0.5, -1.0];
        let got = matvec(&w, &v).unwrap();
        let col = Tensor::from_vec([3, 1], v.to_vec()).unwrap();
        let want = matmul(&w, &col).unwrap();
        assert_eq!(got, want.data());
    }

    #[test]
    fn matvec_transposed_agrees() {
        let w = Tensor::from_vec([2, 3], vec![1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let u = [2.0f64, -1.0];
        let got = matvec_transposed(&w, &u).unwrap();
        assert_eq!(got, vec![-2.0, -1.0, 0.0]);
    }

    #[test]
    fn from_vec_rejects_bad_shapes() {
        assert!(Tensor::from_vec([2, 0], Vec::<f32>::new()).is_err());
        assert!(Tensor::from_vec([2, 2], vec![1.0f32; 3]).is_err());
    }
}
