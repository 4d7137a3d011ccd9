//! Dense N-order tensors and matrices.
//!
//! Storage is row-major: the last mode varies fastest. Modes are indexed from
//! zero throughout the crate.
//!
//! # Unfolding convention
//!
//! `unfold(t, n)` has `I_n` rows. Its columns enumerate the remaining modes in
//! increasing mode order, again with the last one varying fastest. With this
//! convention the full multilinear product `Y = X ×_0 U_0 ×_1 U_1 … ×_{N-1} U_{N-1}`
//! satisfies
//!
//! ```text
//! unfold(Y, n) = U_n · unfold(X, n) · (U_0 ⊗ … ⊗ U_{n-1} ⊗ U_{n+1} ⊗ … ⊗ U_{N-1})ᵀ
//! ```
//!
//! i.e. the Kronecker chain of the other factors is taken in increasing mode
//! order (see [`kron_chain`]).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = checked_volume(&dims)?;
        if len != data.len() {
            return Err(Error::shape(format!(
                "dims {:?} need {} values, got {}",
                dims,
                len,
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::filled(dims, 0.0)
    }

    pub fn filled(dims: &[usize], value: f64) -> Result<Self> {
        let len = checked_volume(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            data: vec![value; len],
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index, in row-major order.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = checked_volume(dims)?;
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..len {
            data.push(f(&idx));
            increment_index(&mut idx, dims);
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn vector(data: Vec<f64>) -> Result<Self> {
        Self::new(vec![data.len()], data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
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

    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.dims)
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        idx.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let k = self.linear_index(idx);
        self.data[k] = value;
    }

    /// Same data viewed with different extents.
    pub fn reshape(self, dims: Vec<usize>) -> Result<Self> {
        Self::new(dims, self.data)
    }

    /// Order-1 view of the same data.
    pub fn flatten(&self) -> Self {
        Self {
            dims: vec![self.data.len()],
            data: self.data.clone(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::mismatch(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(Self {
            dims: self.dims.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// (product of extents before `mode`, extent of `mode`, product after).
    fn split_at_mode(&self, mode: usize) -> (usize, usize, usize) {
        let outer = self.dims[..mode].iter().product();
        let inner = self.dims[mode + 1..].iter().product();
        (outer, self.dims[mode], inner)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape(format!("matrix {rows}x{cols} has a zero extent")));
        }
        if rows * cols != data.len() {
            return Err(Error::shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::shape("ragged rows"));
        }
        Self::new(r, c, rows.iter().flat_map(|row| row.iter().copied()).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::mismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// First `k` columns.
    pub fn leading_columns(&self, k: usize) -> Self {
        let k = k.min(self.cols);
        Self::from_fn(self.rows, k, |i, j| self.get(i, j))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn row_major_strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; dims.len()];
    for n in (0..dims.len().saturating_sub(1)).rev() {
        strides[n] = strides[n + 1] * dims[n + 1];
    }
    strides
}

/// Advances a row-major multi-index; wraps to all zeros after the last entry.
pub(crate) fn increment_index(idx: &mut [usize], dims: &[usize]) {
    for n in (0..dims.len()).rev() {
        idx[n] += 1;
        if idx[n] < dims[n] {
            return;
        }
        idx[n] = 0;
    }
}

pub(crate) fn checked_volume(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::shape("tensor order must be at least 1"));
    }
    if dims.contains(&0) {
        return Err(Error::shape(format!("zero extent in {dims:?}")));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::ExtentOverflow(format!("volume of {dims:?} overflows")))
}

/// Mode-`mode` matricization; see the module docs for the column order.
pub fn unfold(t: &DenseTensor, mode: usize) -> Result<DenseMatrix> {
    t.check_mode(mode)?;
    let (outer, extent, inner) = t.split_at_mode(mode);
    let cols = outer * inner;
    let mut out = vec![0.0; extent * cols];
    for o in 0..outer {
        for i in 0..extent {
            let src = &t.data[(o * extent + i) * inner..(o * extent + i + 1) * inner];
            let dst = &mut out[i * cols + o * inner..i * cols + (o + 1) * inner];
            dst.copy_from_slice(src);
        }
    }
    DenseMatrix::new(extent, cols, out)
}

/// Inverse of [`unfold`].
pub fn fold(m: &DenseMatrix, mode: usize, dims: &[usize]) -> Result<DenseTensor> {
    if mode >= dims.len() {
        return Err(Error::ModeOutOfRange {
            mode,
            order: dims.len(),
        });
    }
    let total = checked_volume(dims)?;
    if m.rows != dims[mode] || m.rows * m.cols != total {
        return Err(Error::mismatch(format!(
            "{}x{} matrix cannot fold into {:?} along mode {}",
            m.rows, m.cols, dims, mode
        )));
    }
    let outer: usize = dims[..mode].iter().product();
    let inner: usize = dims[mode + 1..].iter().product();
    let extent = dims[mode];
    let cols = m.cols;
    let mut data = vec![0.0; total];
    for o in 0..outer {
        for i in 0..extent {
            data[(o * extent + i) * inner..(o * extent + i + 1) * inner]
                .copy_from_slice(&m.data[i * cols + o * inner..i * cols + (o + 1) * inner]);
        }
    }
    DenseTensor::new(dims.to_vec(), data)
}

/// n-mode product `t ×_mode u`: the `mode` extent becomes `u.rows()`.
pub fn mode_multiply(t: &DenseTensor, u: &DenseMatrix, mode: usize) -> Result<DenseTensor> {
    t.check_mode(mode)?;
    if u.cols != t.dims[mode] {
        return Err(Error::mismatch(format!(
            "factor is {}x{} but mode {} has extent {}",
            u.rows, u.cols, mode, t.dims[mode]
        )));
    }
    let (outer, extent, inner) = t.split_at_mode(mode);
    let out_extent = u.rows;
    let mut data = vec![0.0; outer * out_extent * inner];
    for o in 0..outer {
        let src = &t.data[o * extent * inner..(o + 1) * extent * inner];
        let dst = &mut data[o * out_extent * inner..(o + 1) * out_extent * inner];
        for j in 0..out_extent {
            let urow = u.row(j);
            let out_fiber = &mut dst[j * inner..(j + 1) * inner];
            for (k, &w) in urow.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (d, &s) in out_fiber.iter_mut().zip(&src[k * inner..(k + 1) * inner]) {
                    *d += w * s;
                }
            }
        }
    }
    let mut dims = t.dims.clone();
    dims[mode] = out_extent;
    DenseTensor::new(dims, data)
}

/// Applies several n-mode products over distinct modes, in the given order.
pub fn multi_mode_multiply(
    t: &DenseTensor,
    factors: &[(usize, &DenseMatrix)],
) -> Result<DenseTensor> {
    let mut seen = vec![false; t.order()];
    for &(mode, _) in factors {
        t.check_mode(mode)?;
        if std::mem::replace(&mut seen[mode], true) {
            return Err(Error::DuplicateMode(mode));
        }
    }
    let mut out = t.clone();
    for &(mode, u) in factors {
        out = mode_multiply(&out, u, mode)?;
    }
    Ok(out)
}

pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = DenseMatrix::zeros(rows, cols);
    for ia in 0..a.rows {
        for ja in 0..a.cols {
            let s = a.get(ia, ja);
            if s == 0.0 {
                continue;
            }
            for ib in 0..b.rows {
                let row = ia * b.rows + ib;
                for jb in 0..b.cols {
                    out.data[row * cols + ja * b.cols + jb] = s * b.get(ib, jb);
                }
            }
        }
    }
    out
}

/// Left-to-right Kronecker product `ms[0] ⊗ ms[1] ⊗ …`.
pub fn kron_chain(ms: &[&DenseMatrix]) -> Result<DenseMatrix> {
    let (first, rest) = ms
        .split_first()
        .ok_or_else(|| Error::arg("kron_chain of an empty list"))?;
    Ok(rest.iter().fold((*first).clone(), |acc, m| kron(&acc, m)))
}

pub fn frobenius_sq_distance(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    if a.dims != b.dims {
        return Err(Error::mismatch(format!("{:?} vs {:?}", a.dims, b.dims)));
    }
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}
