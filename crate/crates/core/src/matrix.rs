//! Column-major dense matrix.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense real matrix stored column-major, so every sample is a contiguous
/// column. Entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from column-major values, rejecting wrong lengths and
    /// non-finite entries.
    pub fn from_col_major(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::dim(format!("{rows}x{cols} overflows")))?;
        if values.len() != expected {
            return Err(Error::shape(
                format!("{expected} values for {rows}x{cols}"),
                format!("{} values", values.len()),
            ));
        }
        let m = DenseMatrix { rows, cols, values };
        m.check_finite()?;
        Ok(m)
    }

    /// Builds a matrix from row slices; convenient for small literals.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::dim("ragged rows"));
        }
        Self::from_col_major(nrows, ncols, {
            let mut v = Vec::with_capacity(nrows * ncols);
            for c in 0..ncols {
                v.extend(rows.iter().map(|r| r[c]));
            }
            v
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                values.push(f(r, c));
            }
        }
        DenseMatrix { rows, cols, values }
    }

    /// Stacks equal-length columns side by side.
    pub fn from_columns<C: AsRef<[f64]>>(rows: usize, columns: &[C]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows * columns.len());
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(Error::shape(
                    format!("column {j} of length {rows}"),
                    format!("length {}", c.len()),
                ));
            }
            values.extend_from_slice(c);
        }
        Self::from_col_major(rows, columns.len(), values)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Column-major values.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.values[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.values[c * self.rows + r] = v;
    }

    #[inline]
    pub fn col(&self, c: usize) -> &[f64] {
        &self.values[c * self.rows..(c + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.values[c * self.rows..(c + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks_exact panics on zero rows
        (0..self.cols).map(move |c| self.col(c))
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::NonFinite {
                row: i % self.rows.max(1),
                col: i / self.rows.max(1),
            }),
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// `self · other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::shape(
                format!("{} rows on the right operand", self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let dst = &mut out.values[j * self.rows..(j + 1) * self.rows];
            for (k, &b) in other.col(j).iter().enumerate() {
                if b != 0.0 {
                    axpy(b, self.col(k), dst);
                }
            }
        }
        out.check_finite()?;
        Ok(out)
    }

    /// `self · v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::shape(
                format!("vector of length {}", self.cols),
                format!("length {}", v.len()),
            ));
        }
        let mut out = vec![0.0; self.rows];
        for (k, &b) in v.iter().enumerate() {
            if b != 0.0 {
                axpy(b, self.col(k), &mut out);
            }
        }
        Ok(out)
    }

    /// `selfᵀ · v`.
    pub fn tr_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::shape(
                format!("vector of length {}", self.rows),
                format!("length {}", v.len()),
            ));
        }
        Ok(self.columns().map(|c| dot(c, v)).collect())
    }

    /// `selfᵀ · self`, symmetric `cols × cols`.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut g = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = dot(self.col(i), self.col(j));
                g.values[j * n + i] = v;
                g.values[i * n + j] = v;
            }
        }
        g
    }

    pub fn select_columns(&self, idx: &[usize]) -> DenseMatrix {
        let mut values = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            values.extend_from_slice(self.col(j));
        }
        DenseMatrix {
            rows: self.rows,
            cols: idx.len(),
            values,
        }
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        dot(&self.values, &self.values)
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.frobenius_norm_sq())
    }

    pub fn row_norms(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.rows];
        for c in self.columns() {
            for (a, &v) in acc.iter_mut().zip(c) {
                *a += v * v;
            }
        }
        acc.into_iter().map(libm::sqrt).collect()
    }

    pub fn col_norms(&self) -> Vec<f64> {
        self.columns().map(norm).collect()
    }

    /// Appends zero rows, leaving existing entries in place.
    pub fn pad_rows(&self, extra: usize) -> DenseMatrix {
        let rows = self.rows + extra;
        DenseMatrix::from_fn(rows, self.cols, |r, c| if r < self.rows { self.get(r, c) } else { 0.0 })
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// `self - other`.
    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_major_layout() {
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(m.as_slice(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        assert_eq!(m.col(1), &[2.0, 5.0]);
        assert_eq!(m.row(1), vec![4.0, 5.0, 6.0]);
    }

    #[test]
    fn rejects_bad_length_and_nan() {
        assert!(DenseMatrix::from_col_major(2, 2, vec![1.0; 3]).is_err());
        assert_eq!(
            DenseMatrix::from_col_major(2, 2, vec![1.0, 1.0, f64::NAN, 1.0]),
            Err(Error::NonFinite { row: 0, col: 1 })
        );
    }

    #[test]
    fn matmul_small() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[&[5.0], &[6.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.as_slice(), &[17.0, 39.0]);
        assert!(b.matmul(&a).is_err());
        assert_eq!(a.tr_matvec(&[1.0, 1.0]).unwrap(), vec![4.0, 6.0]);
        assert_eq!(a.gram(), a.transpose().matmul(&a).unwrap());
    }

    #[test]
    fn norms() {
        let m = DenseMatrix::from_rows(&[&[3.0, 0.0], &[4.0, 0.0]]).unwrap();
        assert_eq!(m.col_norms(), vec![5.0, 0.0]);
        assert_eq!(m.row_norms(), vec![3.0, 4.0]);
        assert_eq!(m.frobenius_norm(), 5.0);
    }
}
