use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Row-major dense real matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", &self.data[r * self.cols..(r + 1) * self.cols])?;
        }
        Ok(())
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(invalid(format!("{rows}x{cols} matrix needs {} values, got {}", rows * cols, data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let rows = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != rows) {
            return Err(invalid("columns differ in length"));
        }
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            m.set_column(j, c);
        }
        if m.data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        DenseMatrix { rows, cols, data }
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

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.data[r * self.cols + c]).collect()
    }

    pub fn set_column(&mut self, c: usize, v: &[f64]) {
        for (r, x) in v.iter().enumerate() {
            self.data[r * self.cols + c] = *x;
        }
    }

    /// Columns `range` as a new matrix.
    pub fn columns(&self, range: std::ops::Range<usize>) -> DenseMatrix {
        Self::from_fn(self.rows, range.len(), |r, c| self[(r, range.start + c)])
    }

    pub fn transpose(&self) -> DenseMatrix {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in orow.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · other` without forming the transpose.
    pub fn t_matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, other.rows, "t_matmul shape mismatch");
        let mut out = Self::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let brow = other.row(k);
            for i in 0..self.cols {
                let a = self.data[k * self.cols + i];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out.data[i * other.cols..(i + 1) * other.cols].iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale_columns(&mut self, s: &[f64]) {
        for r in 0..self.rows {
            for (c, v) in self.data[r * self.cols..(r + 1) * self.cols].iter_mut().enumerate() {
                *v *= s[c];
            }
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

pub type ComplexVector = Vec<Complex64>;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(invalid("complex matrix size mismatch"));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("complex matrix has non-finite entries"));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_real(m: &DenseMatrix) -> Self {
        ComplexMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> ComplexVector {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, v: &[Complex64]) {
        for (r, z) in v.iter().enumerate() {
            self[(r, c)] = *z;
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> ComplexVector {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Real matrix times complex matrix.
    pub fn real_matmul(a: &DenseMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(a.cols(), b.rows);
        let mut out = ComplexMatrix::zeros(a.rows(), b.cols);
        for i in 0..a.rows() {
            for k in 0..a.cols() {
                let x = a[(i, k)];
                if x == 0.0 {
                    continue;
                }
                for j in 0..b.cols {
                    out.data[i * b.cols + j] += b.data[k * b.cols + j] * x;
                }
            }
        }
        out
    }

    pub fn scale_columns(&mut self, s: &[Complex64]) {
        for r in 0..self.rows {
            for c in 0..self.cols {
                self.data[r * self.cols + c] *= s[c];
            }
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_agree() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![1.0, 0.0, 2.0], vec![-1.0, 1.0, 0.0]]).unwrap();
        let ab = a.matmul(&b);
        assert_eq!(ab.row(2), &[-1.0, 6.0, 10.0]);
        assert_eq!(a.t_matmul(&a), a.transpose().matmul(&a));
        assert_eq!(a.matvec(&[1.0, 1.0]), vec![3.0, 7.0, 11.0]);
        assert_eq!(a.columns(1..2).column(0), vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(DenseMatrix::new(2, 2, vec![0.0; 3]).is_err());
        assert!(DenseMatrix::new(1, 1, vec![f64::INFINITY]).is_err());
        assert!(DenseMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
