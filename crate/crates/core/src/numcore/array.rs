//! Dense row-major `f64` arrays.
//!
//! Layers treat a rank-1 array of length `n` as a single sample and a rank-2
//! array of shape `[batch, n]` as a batch of samples stored one per row.

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RealArray {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl RealArray {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.iter().product::<usize>() != data.len() || shape.contains(&0) {
            return Err(Error::Shape { shape, len: data.len() });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self::vector(vec![value])
    }

    /// Row-major matrix. Panics when `data.len() != rows * cols`.
    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data length");
        Self {
            shape: vec![rows, cols],
            data,
        }
    }

    /// Stacks equal-length rows into a `[rows.len(), n]` batch.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dims("from_rows", cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Self::new(vec![rows.len(), cols], data)
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

    /// Number of samples when viewed as a batch.
    pub fn rows(&self) -> usize {
        match self.shape.len() {
            0 | 1 => 1,
            _ => self.shape[0],
        }
    }

    /// Per-sample width when viewed as a batch.
    pub fn cols(&self) -> usize {
        match self.shape.len() {
            0 => 1,
            1 => self.shape[0],
            _ => self.data.len() / self.shape[0],
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(Error::Shape {
                shape,
                len: self.data.len(),
            });
        }
        self.shape = shape;
        Ok(self)
    }

    /// Same data with the batch shape `[rows, cols]` of `like`'s rank.
    pub(crate) fn with_batch_shape(self, rows: usize, rank_one: bool) -> Self {
        let cols = self.data.len() / rows.max(1);
        let shape = if rank_one { vec![cols] } else { vec![rows, cols] };
        Self { shape, data: self.data }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn map_inplace(&mut self, f: impl Fn(f64) -> f64) {
        self.data.iter_mut().for_each(|v| *v = f(*v));
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same(other, "zip_map")?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        self.check_same(other, "axpy")?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn sum_sq(&self) -> f64 {
        pairwise_sum(&self.data.iter().map(|v| v * v).collect::<Vec<_>>())
    }

    /// Determinant of a square matrix (LU with partial pivoting).
    pub fn determinant(&self) -> f64 {
        let n = self.rows();
        assert_eq!(self.cols(), n, "determinant needs a square matrix");
        nalgebra::DMatrix::from_row_slice(n, n, &self.data).determinant()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other, "max_abs_diff")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Splits every row at column `at` into two batches.
    pub fn split_cols(&self, at: usize) -> (Self, Self) {
        let (rows, cols) = (self.rows(), self.cols());
        debug_assert!(at <= cols);
        let mut left = Vec::with_capacity(rows * at);
        let mut right = Vec::with_capacity(rows * (cols - at));
        for r in 0..rows {
            let row = self.row(r);
            left.extend_from_slice(&row[..at]);
            right.extend_from_slice(&row[at..]);
        }
        (Self::matrix(rows, at, left), Self::matrix(rows, cols - at, right))
    }

    /// Row-wise concatenation of two batches with equal row counts.
    pub fn concat_cols(left: &Self, right: &Self) -> Self {
        let rows = left.rows();
        debug_assert_eq!(rows, right.rows());
        let (lc, rc) = (left.cols(), right.cols());
        let mut data = Vec::with_capacity(rows * (lc + rc));
        for r in 0..rows {
            data.extend_from_slice(left.row(r));
            data.extend_from_slice(right.row(r));
        }
        Self::matrix(rows, lc + rc, data)
    }

    /// Selects the given rows into a new `[idx.len(), cols]` batch.
    pub fn gather_rows(&self, idx: &[usize]) -> Self {
        let cols = self.cols();
        let mut data = Vec::with_capacity(idx.len() * cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self::matrix(idx.len(), cols, data)
    }

    /// Adjoint of [`gather_rows`](Self::gather_rows): `self[idx[r]] += src[r]`.
    pub fn scatter_add_rows(&mut self, idx: &[usize], src: &Self) {
        assert_eq!(idx.len(), src.rows(), "scatter_add_rows index length");
        for (r, &i) in idx.iter().enumerate() {
            for (d, s) in self.row_mut(i).iter_mut().zip(src.row(r)) {
                *d += s;
            }
        }
    }

    /// Sum over rows, giving a vector of length `cols`.
    pub fn col_sums(&self) -> Vec<f64> {
        let cols = self.cols();
        let mut out = vec![0.0; cols];
        for r in 0..self.rows() {
            for (o, v) in out.iter_mut().zip(self.row(r)) {
                *o += v;
            }
        }
        out
    }

    /// `self · wᵀ` for a batch `[rows, k]` and weights `[l, k]`, giving `[rows, l]`.
    pub fn matmul_t(&self, w: &Self) -> Self {
        let (n, k, l) = (self.rows(), self.cols(), w.rows());
        debug_assert_eq!(w.cols(), k);
        let mut out = vec![0.0; n * l];
        gemm(n, k, l, 1.0, &self.data, false, &w.data, true, 0.0, &mut out);
        Self::matrix(n, l, out)
    }

    /// `self · w` for a batch `[rows, l]` and weights `[l, k]`, giving `[rows, k]`.
    pub fn matmul(&self, w: &Self) -> Self {
        let (n, l, k) = (self.rows(), self.cols(), w.cols());
        debug_assert_eq!(w.rows(), l);
        let mut out = vec![0.0; n * k];
        gemm(n, l, k, 1.0, &self.data, false, &w.data, false, 0.0, &mut out);
        Self::matrix(n, k, out)
    }

    /// `self += alpha · aᵀ b` with `a: [rows, l]`, `b: [rows, k]`, `self: [l, k]`.
    pub fn add_t_matmul(&mut self, alpha: f64, a: &Self, b: &Self) {
        let (n, l, k) = (a.rows(), a.cols(), b.cols());
        debug_assert_eq!(b.rows(), n);
        debug_assert_eq!(self.len(), l * k);
        gemm(l, n, k, alpha, &a.data, true, &b.data, false, 1.0, &mut self.data);
    }

    /// Adds `v` to every row.
    pub fn add_row_vector(&mut self, v: &[f64]) {
        let c = self.cols();
        debug_assert_eq!(v.len(), c);
        for row in self.data.chunks_mut(c) {
            row.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        }
    }

    /// Adds the column sums of `batch` into `self` (a vector of length `cols`).
    pub fn add_col_sums(&mut self, batch: &Self) {
        let c = batch.cols();
        debug_assert_eq!(self.len(), c);
        for row in batch.data.chunks(c) {
            self.data.iter_mut().zip(row).for_each(|(a, b)| *a += b);
        }
    }

    pub(crate) fn check_same(&self, other: &Self, context: &'static str) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::dims(context, self.len(), other.len()));
        }
        Ok(())
    }

    fn to_value(&self) -> Value {
        fn nest(shape: &[usize], data: &[f64]) -> Value {
            if shape.len() <= 1 {
                return Value::Array(data.iter().map(|&v| Value::from(v)).collect());
            }
            let stride = data.len() / shape[0];
            Value::Array(data.chunks(stride).map(|chunk| nest(&shape[1..], chunk)).collect())
        }
        nest(&self.shape, &self.data)
    }

    fn from_value(value: &Value) -> std::result::Result<Self, String> {
        fn walk(
            v: &Value,
            depth: usize,
            shape: &mut Vec<usize>,
            data: &mut Vec<f64>,
        ) -> std::result::Result<(), String> {
            match v {
                Value::Array(items) => {
                    if shape.len() == depth {
                        shape.push(items.len());
                    } else if shape[depth] != items.len() {
                        return Err("ragged nested list".into());
                    }
                    items.iter().try_for_each(|item| walk(item, depth + 1, shape, data))
                }
                Value::Number(n) => {
                    if shape.len() != depth {
                        return Err("mixed nesting depth".into());
                    }
                    data.push(n.as_f64().ok_or("number out of range")?);
                    Ok(())
                }
                _ => Err("expected a number or a list".into()),
            }
        }
        let mut shape = Vec::new();
        let mut data = Vec::new();
        walk(value, 0, &mut shape, &mut data)?;
        RealArray::new(shape, data).map_err(|e| e.to_string())
    }
}

impl Serialize for RealArray {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_value().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RealArray {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        RealArray::from_value(&value).map_err(de::Error::custom)
    }
}

/// Pairwise (cascade) summation with a fixed reduction tree.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// `c = alpha * op(a) * op(b) + beta * c` where `op(a)` is `m x k` and
/// `op(b)` is `k x n`, all row-major. A transposed operand is stored as
/// its untransposed shape (`k x m` for `a`, `n x k` for `b`).
#[allow(clippy::too_many_arguments)]
pub fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    a_trans: bool,
    b: &[f64],
    b_trans: bool,
    beta: f64,
    c: &mut [f64],
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|v| *v *= beta);
        return;
    }
    let (rsa, csa) = if a_trans { (1, m) } else { (k, 1) };
    let (rsb, csb) = if b_trans { (1, k) } else { (n, 1) };
    // SAFETY: the slices cover exactly the strided extents computed above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
